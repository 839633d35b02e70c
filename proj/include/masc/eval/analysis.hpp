// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Corpus analyses over generated rationales and dataset splits: sentiment
// intensity histograms, aesthetic vocabulary frequencies, and the split
// summary table.

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "masc/data/sample.hpp"

namespace masc::eval {

// ---- sentiment intensity ----------------------------------------------------

struct HistogramConfig {
    int bins = 20;
    double lo = -1.0;
    double hi = 1.0;

    void validate() const;
};

struct Histogram {
    std::vector<double> edges;  // bins + 1
    std::vector<int> counts;    // bins
    int n = 0;
};

// Maps a text to an intensity score.
using IntensityFn = std::function<double(const std::string&)>;

// (positive hits - negative hits) / token count; empty text scores 0.
// Tokens are lowercased and stripped of edge punctuation before lookup.
IntensityFn lexicon_intensity(std::set<std::string> positive, std::set<std::string> negative);

// Every text falls into exactly one bin; scores are clamped to [lo, hi].
Histogram sentiment_intensity_histogram(const std::vector<std::string>& texts,
                                        const IntensityFn& intensity,
                                        const HistogramConfig& cfg = {});

std::string histogram_csv(const Histogram& h);

// ---- aesthetic vocabulary ---------------------------------------------------

// Case-insensitive counts restricted to the lexicon, ordered by count
// descending then word ascending, truncated to top_k.
std::vector<std::pair<std::string, int>> aesthetic_word_frequency(
    const std::vector<std::string>& texts, const std::set<std::string>& lexicon, int top_k);

// One lowercased word per line; blank lines and '#' comments are skipped.
std::set<std::string> load_word_list(const std::filesystem::path& path);

// ---- split summary ----------------------------------------------------------

struct DatasetStats {
    int positive = 0;
    int neutral = 0;
    int negative = 0;
    int total = 0;
    int sentences = 0;        // distinct (image, sentence) pairs
    double avg_length = 0;    // mean sentence token count over distinct pairs
    double avg_aspect = 0;    // total / sentences
    // Mean token counts over the samples where the field is present.
    double avg_len_sr = 0;
    double avg_len_ir = 0;
    double avg_len_ac = 0;
    double avg_len_fd = 0;
    double avg_len_ao = 0;
};

DatasetStats dataset_stats(const std::vector<data::Sample>& samples);

std::string encode_stats_json(const DatasetStats& s);
std::string render_stats_text(const DatasetStats& s);

}  // namespace masc::eval
