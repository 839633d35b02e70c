// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#include "masc/data/sample.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "nlohmann/json.hpp"

#include "masc/common/fsio.hpp"

namespace masc::data {

using ordered_json = nlohmann::ordered_json;

bool is_valid_label(const std::string& label) {
    for (const char* l : kLabels)
        if (label == l) return true;
    return false;
}

int label_index(const std::string& label) {
    for (int i = 0; i < 3; ++i)
        if (label == kLabels[i]) return i;
    throw std::invalid_argument("unknown sentiment label: " + label);
}

std::string encode_sample(const Sample& s) {
    ordered_json j;
    j["id"] = s.id;
    j["image"] = s.image;
    j["sentence"] = s.sentence;
    j["target"] = s.target;
    j["label"] = s.label;
    if (s.object) {
        j["object"] = {{"object_id", s.object->object_id},
                       {"bbox",
                        {{"x", s.object->bbox.x},
                         {"y", s.object->bbox.y},
                         {"w", s.object->bbox.w},
                         {"h", s.object->bbox.h}}},
                       {"linked_target", s.object->linked_target}};
    }
    j["ac"] = s.ac;
    if (s.od)
        j["od"] = {{"kind", translation::aux_kind_name(s.od->kind)},
                   {"text", s.od->text},
                   {"source", s.od->source}};
    if (s.sr) j["sr"] = *s.sr;
    if (s.ir) j["ir"] = *s.ir;
    if (s.gc) j["gc"] = *s.gc;
    return j.dump();
}

Sample decode_sample(const std::string& line) {
    ordered_json j = ordered_json::parse(line);
    Sample s;
    s.id = j.at("id").get<std::string>();
    s.image = j.at("image").get<std::string>();
    s.sentence = j.at("sentence").get<std::string>();
    s.target = j.at("target").get<std::string>();
    s.label = j.at("label").get<std::string>();
    if (!is_valid_label(s.label))
        throw std::invalid_argument("sample " + s.id + ": unknown label " + s.label);
    if (j.contains("object")) {
        translation::ObjectAnnotation o;
        o.object_id = j["object"].at("object_id").get<int>();
        o.bbox.x = j["object"]["bbox"].at("x").get<double>();
        o.bbox.y = j["object"]["bbox"].at("y").get<double>();
        o.bbox.w = j["object"]["bbox"].at("w").get<double>();
        o.bbox.h = j["object"]["bbox"].at("h").get<double>();
        o.linked_target = j["object"].at("linked_target").get<std::string>();
        s.object = o;
    }
    s.ac = j.value("ac", std::string());
    if (j.contains("od")) {
        translation::AuxiliaryText od;
        od.kind = translation::aux_kind_from_name(j["od"].at("kind").get<std::string>());
        od.text = j["od"].at("text").get<std::string>();
        od.source = j["od"].value("source", std::string());
        s.od = od;
    }
    if (j.contains("sr")) s.sr = j.at("sr").get<std::string>();
    if (j.contains("ir")) s.ir = j.at("ir").get<std::string>();
    if (j.contains("gc")) s.gc = j.at("gc").get<std::string>();
    return s;
}

std::vector<Sample> read_samples(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::vector<Sample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(decode_sample(line));
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " +
                                     e.what());
        }
    }
    return out;
}

void write_samples(const std::filesystem::path& path, const std::vector<Sample>& samples) {
    std::string body;
    for (const Sample& s : samples) body += encode_sample(s) + "\n";
    atomic_write_file(path, body);
}

}  // namespace masc::data
