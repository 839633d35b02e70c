// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#include "masc/learning/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "json.hpp"

#include "masc/common/fsio.hpp"
#include "masc/common/hash.hpp"
#include "masc/common/random.hpp"

namespace masc::learning {

namespace {

using nlohmann::ordered_json;

constexpr const char* kComponentOrder[] = {"sc", "srg", "irg", "align", "total"};

}  // namespace

InputPolicy TrainConfig::input_policy() const {
    InputPolicy p;
    p.use_od = enable_od;
    p.use_caption = enable_aes_cap;
    p.aesthetic_caption = aesthetic_caption;
    return p;
}

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("epochs must be positive");
    if (batch < 1) throw std::invalid_argument("batch size must be positive");
    if (!(lr > 0)) throw std::invalid_argument("learning rate must be positive");
    if (weight_decay < 0) throw std::invalid_argument("weight decay cannot be negative");
    if (max_new_tokens < 1) throw std::invalid_argument("max_new_tokens must be positive");
    weights.validate();
    model.validate();
}

std::string train_config_to_json(const TrainConfig& cfg) {
    ordered_json j;
    j["epochs"] = cfg.epochs;
    j["batch"] = cfg.batch;
    j["lr"] = cfg.lr;
    j["weight_decay"] = cfg.weight_decay;
    j["alpha"] = cfg.weights.alpha;
    j["lambda"] = cfg.weights.lambda;
    j["seed"] = cfg.seed;
    j["enable_srg"] = cfg.enable_srg;
    j["enable_irg"] = cfg.enable_irg;
    j["enable_lsa"] = cfg.enable_lsa;
    j["enable_od"] = cfg.enable_od;
    j["enable_aes_cap"] = cfg.enable_aes_cap;
    j["aesthetic_caption"] = cfg.aesthetic_caption;
    j["max_new_tokens"] = cfg.max_new_tokens;
    j["model"] = {{"dim", cfg.model.dim},
                  {"layers", cfg.model.layers},
                  {"ffn_hidden", cfg.model.ffn_hidden},
                  {"max_len", cfg.model.max_len},
                  {"visual_prefix", cfg.model.visual_prefix},
                  {"visual_dim", cfg.model.visual_dim}};
    j["lsa"] = {{"dim", cfg.lsa.dim},
                {"scorer_hidden", cfg.lsa.scorer_hidden},
                {"agg_hidden", cfg.lsa.agg_hidden},
                {"n_f_max", cfg.lsa.n_f_max},
                {"beta", cfg.lsa.beta},
                {"tau", cfg.lsa.tau},
                {"gamma", cfg.lsa.gamma},
                {"canonical_logits", cfg.lsa.gumbel_form == lsa::GumbelForm::kCanonicalLogits},
                {"halve_alignment", cfg.lsa.halve_alignment},
                {"min_keep", cfg.lsa.min_keep}};
    return j.dump(2) + "\n";
}

TrainConfig train_config_from_json(const std::string& text) {
    ordered_json j = ordered_json::parse(text);
    TrainConfig cfg;
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch = j.value("batch", cfg.batch);
    cfg.lr = j.value("lr", cfg.lr);
    cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
    cfg.weights.alpha = j.value("alpha", cfg.weights.alpha);
    cfg.weights.lambda = j.value("lambda", cfg.weights.lambda);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.enable_srg = j.value("enable_srg", cfg.enable_srg);
    cfg.enable_irg = j.value("enable_irg", cfg.enable_irg);
    cfg.enable_lsa = j.value("enable_lsa", cfg.enable_lsa);
    cfg.enable_od = j.value("enable_od", cfg.enable_od);
    cfg.enable_aes_cap = j.value("enable_aes_cap", cfg.enable_aes_cap);
    cfg.aesthetic_caption = j.value("aesthetic_caption", cfg.aesthetic_caption);
    cfg.max_new_tokens = j.value("max_new_tokens", cfg.max_new_tokens);
    if (j.contains("model")) {
        const auto& m = j.at("model");
        cfg.model.dim = m.value("dim", cfg.model.dim);
        cfg.model.layers = m.value("layers", cfg.model.layers);
        cfg.model.ffn_hidden = m.value("ffn_hidden", cfg.model.ffn_hidden);
        cfg.model.max_len = m.value("max_len", cfg.model.max_len);
        cfg.model.visual_prefix = m.value("visual_prefix", cfg.model.visual_prefix);
        cfg.model.visual_dim = m.value("visual_dim", cfg.model.visual_dim);
    }
    if (j.contains("lsa")) {
        const auto& l = j.at("lsa");
        cfg.lsa.dim = l.value("dim", cfg.lsa.dim);
        cfg.lsa.scorer_hidden = l.value("scorer_hidden", cfg.lsa.scorer_hidden);
        cfg.lsa.agg_hidden = l.value("agg_hidden", cfg.lsa.agg_hidden);
        cfg.lsa.n_f_max = l.value("n_f_max", cfg.lsa.n_f_max);
        cfg.lsa.beta = l.value("beta", cfg.lsa.beta);
        cfg.lsa.tau = l.value("tau", cfg.lsa.tau);
        cfg.lsa.gamma = l.value("gamma", cfg.lsa.gamma);
        cfg.lsa.gumbel_form = l.value("canonical_logits", false)
                                  ? lsa::GumbelForm::kCanonicalLogits
                                  : lsa::GumbelForm::kLogOfSum;
        cfg.lsa.halve_alignment = l.value("halve_alignment", cfg.lsa.halve_alignment);
        cfg.lsa.min_keep = l.value("min_keep", cfg.lsa.min_keep);
    }
    cfg.validate();
    return cfg;
}

Vocab build_vocab(const std::vector<data::Sample>& samples, const InputPolicy& policy) {
    Vocab v;
    std::vector<std::string> texts;
    for (const data::Sample& s : samples) {
        texts.push_back(build_input(Task::kSC, s, policy));
        texts.push_back(format_target(Task::kSC, s.label, std::nullopt));
        if (s.sr) texts.push_back(format_target(Task::kSRG, s.label, *s.sr));
        if (s.ir) texts.push_back(format_target(Task::kIRG, s.label, *s.ir));
    }
    v.add_corpus(texts);
    return v;
}

std::string encode_epoch_row(const EpochRow& row) {
    ordered_json j;
    j["epoch"] = row.epoch;
    j["split"] = row.split;
    j["acc"] = row.acc;
    j["f1"] = row.f1;
    ordered_json loss = ordered_json::object();
    for (const char* key : kComponentOrder) {
        auto it = row.loss.find(key);
        if (it != row.loss.end()) loss[key] = it->second;
    }
    j["loss"] = loss;
    return j.dump();
}

EpochRow decode_epoch_row(const std::string& line) {
    ordered_json j = ordered_json::parse(line);
    EpochRow row;
    row.epoch = j.at("epoch").get<int>();
    row.split = j.at("split").get<std::string>();
    row.acc = j.at("acc").get<double>();
    row.f1 = j.at("f1").get<double>();
    for (const auto& [key, value] : j.at("loss").items())
        row.loss[key] = value.get<double>();
    return row;
}

Trainer::Trainer(TrainConfig cfg, Vocab vocab, features::FeatureProvider* provider)
    : cfg_(std::move(cfg)),
      vocab_(std::move(vocab)),
      model_(cfg_.model, vocab_.size()),
      lsa_(cfg_.lsa),
      provider_(provider) {
    cfg_.validate();
    if ((cfg_.enable_lsa || cfg_.model.visual_prefix) && provider_ == nullptr)
        throw std::invalid_argument("alignment and visual inputs need a feature provider");
    if (cfg_.enable_lsa && provider_->dim() != cfg_.lsa.dim)
        throw std::invalid_argument("feature dimension does not match the alignment network");
    if (cfg_.model.visual_prefix && provider_->dim() != cfg_.model.visual_dim)
        throw std::invalid_argument("feature dimension does not match the visual prefix");
    model_.init_params(store_, cfg_.seed);
    if (cfg_.enable_lsa) lsa_.init_params(store_, cfg_.seed);
    ad::AdamWConfig oc;
    oc.lr = cfg_.lr;
    oc.weight_decay = cfg_.weight_decay;
    opt_ = ad::AdamW(oc);
}

std::vector<Task> Trainer::enabled_tasks() const {
    std::vector<Task> tasks{Task::kSC};
    if (cfg_.enable_srg) tasks.push_back(Task::kSRG);
    if (cfg_.enable_irg) tasks.push_back(Task::kIRG);
    return tasks;
}

std::vector<int> Trainer::encode_input(const data::Sample& sample, Task task) const {
    return vocab_.encode(build_input(task, sample, cfg_.input_policy()));
}

std::vector<int> Trainer::encode_target(const data::Sample& sample, Task task) const {
    std::optional<std::string> rationale;
    if (task == Task::kSRG) {
        if (!sample.sr)
            throw std::runtime_error("sample " + sample.id + " has no semantic rationale");
        rationale = *sample.sr;
    } else if (task == Task::kIRG) {
        if (!sample.ir)
            throw std::runtime_error("sample " + sample.id + " has no impression rationale");
        rationale = *sample.ir;
    }
    return vocab_.encode(format_target(task, sample.label, rationale));
}

ad::Value Trainer::batch_objective(ad::ParamSession& ps,
                                   const std::vector<const data::Sample*>& batch,
                                   std::uint64_t align_seed,
                                   std::map<std::string, double>& components) {
    const double alpha = cfg_.weights.alpha;
    const double lambda = cfg_.weights.lambda;
    ad::Value total;
    bool have_total = false;
    auto add_term = [&](ad::Value term, double weight) {
        ad::Value weighted = ad::scalar_mul(term, weight);
        total = have_total ? ad::add(total, weighted) : weighted;
        have_total = true;
    };

    for (Task task : enabled_tasks()) {
        ad::Value sum;
        bool first = true;
        for (const data::Sample* sample : batch) {
            Eigen::VectorXd vis;
            const Eigen::VectorXd* vis_ptr = nullptr;
            if (cfg_.model.visual_prefix) {
                vis = provider_->image_features(sample->image).cls;
                vis_ptr = &vis;
            }
            ad::Value l = model_.sample_loss(ps, encode_input(*sample, task),
                                             encode_target(*sample, task), vis_ptr);
            sum = first ? l : ad::add(sum, l);
            first = false;
        }
        ad::Value mean = ad::scalar_mul(sum, 1.0 / static_cast<double>(batch.size()));
        const char* key = task == Task::kSC ? "sc" : task == Task::kSRG ? "srg" : "irg";
        components[key] = mean.scalar();
        add_term(mean, task == Task::kSC ? alpha : (1.0 - alpha) / 2.0);
    }

    if (cfg_.enable_lsa && batch.size() >= 2) {
        std::vector<lsa::PairFeatures> pairs;
        pairs.reserve(batch.size());
        for (const data::Sample* sample : batch)
            pairs.push_back({provider_->image_features(sample->image),
                             provider_->text_features(sample->sentence)});
        ad::Value align = lsa_.batch_loss(ps, pairs, align_seed);
        components["align"] = align.scalar();
        add_term(align, lambda);
    }

    components["total"] = total.scalar();
    for (const auto& [key, value] : components) {
        if (!std::isfinite(value))
            throw std::runtime_error("non-finite " + key + " loss at epoch " +
                                     std::to_string(epoch_) + " step " + std::to_string(step_));
    }
    return total;
}

TrainOutcome Trainer::run(const std::vector<data::Sample>& train,
                          const std::vector<data::Sample>& dev,
                          const std::filesystem::path& out_dir, int until_epoch) {
    if (train.empty()) throw std::invalid_argument("training split is empty");
    if (dev.empty()) throw std::invalid_argument("dev split is empty");
    const int last_epoch =
        until_epoch > 0 ? std::min(until_epoch, cfg_.epochs) : cfg_.epochs;
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path metrics_path = out_dir / "metrics.jsonl";
    std::string metrics_lines;
    if (epoch_ > 0 && std::filesystem::exists(metrics_path))
        metrics_lines = read_file(metrics_path);

    TrainOutcome outcome;
    bool first_step = true;
    const int n = static_cast<int>(train.size());
    std::vector<int> order(static_cast<std::size_t>(n));

    for (int e = epoch_ + 1; e <= last_epoch; ++e) {
        epoch_ = e;
        // Each epoch shuffles the identity order so the permutation depends
        // only on (seed, epoch) and survives a checkpoint resume.
        for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
        RandomStream rng(fnv1a64_combine(fnv1a64("epoch", cfg_.seed), std::to_string(e)));
        for (int i = n - 1; i > 0; --i) {
            int j = rng.uniform_int(i + 1);
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }

        std::map<std::string, double> sums;
        std::map<std::string, int> counts;
        for (int start = 0; start < n; start += cfg_.batch) {
            std::vector<const data::Sample*> batch;
            for (int i = start; i < std::min(n, start + cfg_.batch); ++i)
                batch.push_back(&train[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
            ad::Tape tape;
            ad::ParamSession ps(store_, tape);
            std::map<std::string, double> components;
            std::uint64_t align_seed =
                fnv1a64_combine(fnv1a64("align", cfg_.seed), std::to_string(step_));
            ad::Value total = batch_objective(ps, batch, align_seed, components);
            tape.backward(total);
            opt_.step(store_, ps.grads());
            ++step_;
            if (first_step) {
                outcome.initial_total = components["total"];
                first_step = false;
            }
            outcome.final_total = components["total"];
            for (const auto& [key, value] : components) {
                sums[key] += value;
                ++counts[key];
            }
        }

        EpochRow train_row;
        train_row.epoch = e;
        train_row.split = "train";
        for (const auto& [key, value] : sums)
            train_row.loss[key] = value / counts[key];
        {
            std::vector<Sentiment> preds;
            std::vector<std::string> golds;
            for (const data::Sample& s : train) {
                preds.push_back(predict(s, Task::kSC).sentiment);
                golds.push_back(s.label);
            }
            eval::MetricReport r = eval::accuracy_f1(preds, golds);
            train_row.acc = r.accuracy;
            train_row.f1 = r.macro_f1;
        }
        metrics_lines += encode_epoch_row(train_row) + "\n";
        outcome.rows.push_back(train_row);

        auto [dev_report, dev_loss] = evaluate_split(dev);
        EpochRow dev_row;
        dev_row.epoch = e;
        dev_row.split = "dev";
        dev_row.acc = dev_report.accuracy;
        dev_row.f1 = dev_report.macro_f1;
        dev_row.loss = dev_loss;
        metrics_lines += encode_epoch_row(dev_row) + "\n";
        outcome.rows.push_back(dev_row);

        if (dev_report.accuracy > best_dev_acc_) {
            best_dev_acc_ = dev_report.accuracy;
            best_epoch_ = e;
            save_checkpoint(out_dir / "best.json");
        }
        save_checkpoint(out_dir / "last.json");
        atomic_write_file(metrics_path, metrics_lines);
    }

    outcome.best_epoch = best_epoch_;
    outcome.best_dev_acc = best_dev_acc_;
    outcome.steps = step_;
    return outcome;
}

ParsedOutput Trainer::predict(const data::Sample& sample, Task task) {
    Eigen::VectorXd vis;
    const Eigen::VectorXd* vis_ptr = nullptr;
    if (cfg_.model.visual_prefix) {
        vis = provider_->image_features(sample.image).cls;
        vis_ptr = &vis;
    }
    std::vector<int> out =
        model_.generate(store_, encode_input(sample, task), cfg_.max_new_tokens, vis_ptr);
    return parse_output(task, vocab_.decode(out));
}

std::pair<eval::MetricReport, std::map<std::string, double>> Trainer::evaluate_split(
    const std::vector<data::Sample>& samples) {
    if (samples.empty()) throw std::invalid_argument("evaluation split is empty");
    std::map<std::string, double> sums;
    std::map<std::string, int> counts;
    const int n = static_cast<int>(samples.size());
    int batch_index = 0;
    for (int start = 0; start < n; start += cfg_.batch) {
        std::vector<const data::Sample*> batch;
        for (int i = start; i < std::min(n, start + cfg_.batch); ++i)
            batch.push_back(&samples[static_cast<std::size_t>(i)]);
        ad::Tape tape;
        ad::ParamSession ps(store_, tape);
        std::map<std::string, double> components;
        std::uint64_t align_seed =
            fnv1a64_combine(fnv1a64("eval-align", cfg_.seed), std::to_string(batch_index));
        batch_objective(ps, batch, align_seed, components);
        for (const auto& [key, value] : components) {
            sums[key] += value;
            ++counts[key];
        }
        ++batch_index;
    }
    std::map<std::string, double> means;
    for (const auto& [key, value] : sums) means[key] = value / counts[key];

    std::vector<Sentiment> preds;
    std::vector<std::string> golds;
    for (const data::Sample& s : samples) {
        preds.push_back(predict(s, Task::kSC).sentiment);
        golds.push_back(s.label);
    }
    return {eval::accuracy_f1(preds, golds), means};
}

void Trainer::save_checkpoint(const std::filesystem::path& path) {
    ordered_json j;
    j["format"] = 1;
    j["config"] = ordered_json::parse(train_config_to_json(cfg_));
    j["epoch"] = epoch_;
    j["step"] = step_;
    j["best_dev_acc"] = best_dev_acc_;
    j["best_epoch"] = best_epoch_;
    j["vocab"] = vocab_.tokens();

    auto encode_mat = [](const ad::Mat& m) {
        ordered_json t;
        t["rows"] = m.rows();
        t["cols"] = m.cols();
        std::vector<double> data;
        data.reserve(static_cast<std::size_t>(m.size()));
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
        t["data"] = data;
        return t;
    };
    ordered_json params = ordered_json::object();
    for (const auto& [name, value] : store_.raw()) params[name] = encode_mat(value);
    j["params"] = params;

    ordered_json adam;
    adam["t"] = opt_.t();
    ordered_json m = ordered_json::object();
    ordered_json v = ordered_json::object();
    for (const auto& [name, value] : opt_.m()) m[name] = encode_mat(value);
    for (const auto& [name, value] : opt_.v()) v[name] = encode_mat(value);
    adam["m"] = m;
    adam["v"] = v;
    j["adam"] = adam;

    atomic_write_file(path, j.dump() + "\n");
}

Trainer Trainer::resume(const std::filesystem::path& checkpoint,
                        features::FeatureProvider* provider) {
    ordered_json j = ordered_json::parse(read_file(checkpoint));
    TrainConfig cfg = train_config_from_json(j.at("config").dump());
    Vocab vocab = Vocab::from_tokens(j.at("vocab").get<std::vector<std::string>>());
    Trainer t(cfg, std::move(vocab), provider);

    auto decode_mat = [](const ordered_json& tj) {
        ad::Mat m(tj.at("rows").get<Eigen::Index>(), tj.at("cols").get<Eigen::Index>());
        const auto& data = tj.at("data");
        std::size_t k = 0;
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = data.at(k++).get<double>();
        return m;
    };
    std::map<std::string, ad::Mat> params;
    for (const auto& [name, tj] : j.at("params").items()) params[name] = decode_mat(tj);
    t.store_.raw() = std::move(params);

    const auto& adam = j.at("adam");
    t.opt_.set_t(adam.at("t").get<std::int64_t>());
    t.opt_.m().clear();
    t.opt_.v().clear();
    for (const auto& [name, tj] : adam.at("m").items()) t.opt_.m()[name] = decode_mat(tj);
    for (const auto& [name, tj] : adam.at("v").items()) t.opt_.v()[name] = decode_mat(tj);

    t.epoch_ = j.at("epoch").get<int>();
    t.step_ = j.at("step").get<int>();
    t.best_dev_acc_ = j.at("best_dev_acc").get<double>();
    t.best_epoch_ = j.at("best_epoch").get<int>();
    return t;
}

}  // namespace masc::learning
