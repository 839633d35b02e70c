// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#include "masc/eval/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "masc/common/fsio.hpp"
#include "masc/common/text.hpp"

namespace masc::eval {

namespace {

std::string normalize_token(const std::string& token) {
    return strip_punct(to_lower(token));
}

double mean_or_zero(double sum, int n) { return n == 0 ? 0.0 : sum / n; }

}  // namespace

void HistogramConfig::validate() const {
    if (bins < 1) throw std::invalid_argument("histogram needs at least one bin");
    if (!(hi > lo)) throw std::invalid_argument("histogram range is empty");
}

IntensityFn lexicon_intensity(std::set<std::string> positive, std::set<std::string> negative) {
    return [positive = std::move(positive),
            negative = std::move(negative)](const std::string& text) {
        std::vector<std::string> tokens = split_ws(text);
        if (tokens.empty()) return 0.0;
        int score = 0;
        for (const std::string& raw : tokens) {
            std::string t = normalize_token(raw);
            if (positive.count(t))
                ++score;
            else if (negative.count(t))
                --score;
        }
        return static_cast<double>(score) / static_cast<double>(tokens.size());
    };
}

Histogram sentiment_intensity_histogram(const std::vector<std::string>& texts,
                                        const IntensityFn& intensity,
                                        const HistogramConfig& cfg) {
    cfg.validate();
    if (!intensity) throw std::invalid_argument("intensity function is empty");
    Histogram h;
    h.edges.resize(static_cast<std::size_t>(cfg.bins) + 1);
    const double width = (cfg.hi - cfg.lo) / cfg.bins;
    for (int i = 0; i <= cfg.bins; ++i)
        h.edges[static_cast<std::size_t>(i)] = cfg.lo + i * width;
    h.counts.assign(static_cast<std::size_t>(cfg.bins), 0);
    for (const std::string& text : texts) {
        double v = std::clamp(intensity(text), cfg.lo, cfg.hi);
        int idx = static_cast<int>(std::floor((v - cfg.lo) / width));
        idx = std::clamp(idx, 0, cfg.bins - 1);
        ++h.counts[static_cast<std::size_t>(idx)];
        ++h.n;
    }
    return h;
}

std::string histogram_csv(const Histogram& h) {
    std::ostringstream out;
    out << "bin_lo,bin_hi,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i)
        out << h.edges[i] << ',' << h.edges[i + 1] << ',' << h.counts[i] << '\n';
    return out.str();
}

std::vector<std::pair<std::string, int>> aesthetic_word_frequency(
    const std::vector<std::string>& texts, const std::set<std::string>& lexicon, int top_k) {
    if (top_k < 1) throw std::invalid_argument("top_k must be positive");
    std::map<std::string, int> counts;
    for (const std::string& text : texts) {
        for (const std::string& raw : split_ws(text)) {
            std::string t = normalize_token(raw);
            if (lexicon.count(t)) ++counts[t];
        }
    }
    std::vector<std::pair<std::string, int>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(ranked.size()) > top_k) ranked.resize(static_cast<std::size_t>(top_k));
    return ranked;
}

std::set<std::string> load_word_list(const std::filesystem::path& path) {
    std::set<std::string> words;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        std::string w = trim(line);
        if (w.empty() || w[0] == '#') continue;
        words.insert(to_lower(w));
    }
    return words;
}

DatasetStats dataset_stats(const std::vector<data::Sample>& samples) {
    if (samples.empty()) throw std::invalid_argument("no samples to summarize");
    DatasetStats s;
    std::set<std::pair<std::string, std::string>> pairs;
    double sentence_tokens = 0;
    double sum_sr = 0, sum_ir = 0, sum_ac = 0, sum_fd = 0, sum_ao = 0;
    int n_sr = 0, n_ir = 0, n_ac = 0, n_fd = 0, n_ao = 0;
    for (const data::Sample& sample : samples) {
        int li = data::label_index(sample.label);
        if (li == 0)
            ++s.positive;
        else if (li == 1)
            ++s.neutral;
        else
            ++s.negative;
        ++s.total;
        if (pairs.insert({sample.image, sample.sentence}).second)
            sentence_tokens += token_count(sample.sentence);
        if (sample.sr) {
            sum_sr += token_count(*sample.sr);
            ++n_sr;
        }
        if (sample.ir) {
            sum_ir += token_count(*sample.ir);
            ++n_ir;
        }
        if (!sample.ac.empty()) {
            sum_ac += token_count(sample.ac);
            ++n_ac;
        }
        if (sample.od) {
            if (sample.od->kind == translation::AuxKind::kFD) {
                sum_fd += token_count(sample.od->text);
                ++n_fd;
            } else if (sample.od->kind == translation::AuxKind::kAO) {
                sum_ao += token_count(sample.od->text);
                ++n_ao;
            }
        }
    }
    s.sentences = static_cast<int>(pairs.size());
    s.avg_length = mean_or_zero(sentence_tokens, s.sentences);
    s.avg_aspect = static_cast<double>(s.total) / s.sentences;
    s.avg_len_sr = mean_or_zero(sum_sr, n_sr);
    s.avg_len_ir = mean_or_zero(sum_ir, n_ir);
    s.avg_len_ac = mean_or_zero(sum_ac, n_ac);
    s.avg_len_fd = mean_or_zero(sum_fd, n_fd);
    s.avg_len_ao = mean_or_zero(sum_ao, n_ao);
    return s;
}

std::string encode_stats_json(const DatasetStats& s) {
    nlohmann::ordered_json j;
    j["positive"] = s.positive;
    j["neutral"] = s.neutral;
    j["negative"] = s.negative;
    j["total"] = s.total;
    j["sentences"] = s.sentences;
    j["avg_length"] = s.avg_length;
    j["avg_aspect"] = s.avg_aspect;
    j["avg_len_sr"] = s.avg_len_sr;
    j["avg_len_ir"] = s.avg_len_ir;
    j["avg_len_ac"] = s.avg_len_ac;
    j["avg_len_fd"] = s.avg_len_fd;
    j["avg_len_ao"] = s.avg_len_ao;
    return j.dump(2) + "\n";
}

std::string render_stats_text(const DatasetStats& s) {
    char buf[128];
    std::string out;
    auto row_int = [&](const char* name, int v) {
        std::snprintf(buf, sizeof(buf), "%-18s %d\n", name, v);
        out += buf;
    };
    auto row_dbl = [&](const char* name, double v) {
        std::snprintf(buf, sizeof(buf), "%-18s %.2f\n", name, v);
        out += buf;
    };
    row_int("positive", s.positive);
    row_int("neutral", s.neutral);
    row_int("negative", s.negative);
    row_int("total", s.total);
    row_int("sentences", s.sentences);
    row_dbl("avg length", s.avg_length);
    row_dbl("avg aspect", s.avg_aspect);
    row_dbl("avg length sr", s.avg_len_sr);
    row_dbl("avg length ir", s.avg_len_ir);
    row_dbl("avg length ac", s.avg_len_ac);
    row_dbl("avg length fd", s.avg_len_fd);
    row_dbl("avg length ao", s.avg_len_ao);
    return out;
}

}  // namespace masc::eval
