// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "masc/common/fsio.hpp"
#include "masc/common/random.hpp"
#include "masc/features/provider.hpp"
#include "masc/learning/losses.hpp"
#include "masc/learning/model.hpp"
#include "masc/learning/sequences.hpp"
#include "masc/learning/trainer.hpp"
#include "masc/learning/vocab.hpp"

namespace fs = std::filesystem;
using namespace masc;
using namespace masc::learning;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

data::Sample make_sample(const std::string& id, const std::string& sentence,
                         const std::string& target, const std::string& label,
                         bool with_object, const std::string& od_text,
                         const std::string& ac, const std::string& sr,
                         const std::string& ir) {
    data::Sample s;
    s.id = id;
    s.image = id + ".jpg";
    s.sentence = sentence;
    s.target = target;
    s.label = label;
    if (with_object) {
        translation::ObjectAnnotation obj;
        obj.object_id = 1;
        obj.bbox = {1, 2, 3, 4};
        obj.linked_target = target;
        s.object = obj;
        translation::AuxiliaryText od;
        od.kind = translation::AuxKind::kFD;
        od.text = od_text;
        od.source = "mock";
        s.od = od;
    }
    s.ac = ac;
    if (!sr.empty()) s.sr = sr;
    if (!ir.empty()) s.ir = ir;
    return s;
}

std::vector<data::Sample> toy_samples() {
    return {
        make_sample("t1", "the sunrise glows", "sunrise", "positive", false, "",
                    "golden warm sky", "bright joy here", "warm glow feel"),
        make_sample("t2", "rain ruined parade", "parade", "negative", false, "",
                    "gray heavy clouds", "sad wet streets", "cold dull tone"),
        make_sample("t3", "the report arrived", "report", "neutral", false, "",
                    "plain desk scene", "routine paper note", "flat even light"),
        make_sample("t4", "she waves happily", "she", "positive", true,
                    "smiling bright face", "", "glad open smile", "lively warm mood"),
        make_sample("t5", "he slammed the door", "he", "negative", true,
                    "angry tense face", "", "harsh loud exit", "dark tight frame"),
        make_sample("t6", "the clerk waited", "clerk", "neutral", true,
                    "calm still face", "", "plain steady pose", "even soft tone"),
        make_sample("t7", "team won the cup", "team", "positive", true,
                    "joyful open grin", "", "proud big win", "vivid high energy"),
        make_sample("t8", "the car broke down", "car", "negative", false, "",
                    "dim empty road", "bad rough luck", "gloomy flat color"),
    };
}

TrainConfig toy_config() {
    TrainConfig cfg;
    cfg.epochs = 100;
    cfg.batch = 4;
    cfg.lr = 3e-3;
    cfg.seed = 3;
    cfg.max_new_tokens = 12;
    cfg.model.dim = 24;
    cfg.model.ffn_hidden = 48;
    cfg.model.layers = 2;
    cfg.model.max_len = 64;
    cfg.lsa.dim = 8;
    return cfg;
}

TrainConfig small_config() {
    TrainConfig cfg = toy_config();
    cfg.epochs = 2;
    cfg.batch = 2;
    cfg.model.dim = 16;
    cfg.model.ffn_hidden = 24;
    cfg.model.layers = 1;
    cfg.max_new_tokens = 6;
    return cfg;
}

std::set<std::string> loss_keys(const EpochRow& row) {
    std::set<std::string> keys;
    for (const auto& [k, v] : row.loss) keys.insert(k);
    return keys;
}

}  // namespace

TEST_CASE("task and sentiment names round trip") {
    for (Task t : {Task::kSC, Task::kSRG, Task::kIRG})
        CHECK(task_from_name(task_name(t)) == t);
    CHECK_THROWS_AS(task_from_name("SCX"), std::invalid_argument);
    CHECK(sentiment_from_label("positive") == Sentiment::kPositive);
    CHECK(sentiment_from_label("neutral") == Sentiment::kNeutral);
    CHECK(sentiment_from_label("negative") == Sentiment::kNegative);
    CHECK_THROWS_AS(sentiment_from_label("great"), std::invalid_argument);
    CHECK(sentiment_from_token("anything else") == Sentiment::kUndiscerned);
    CHECK(marker_tokens().size() == 10);
}

TEST_CASE("marker escaping is reversible and collision free") {
    CHECK(escape_markers("⟨sen⟩") == "&lab;sen&rab;");
    CHECK(escape_markers("&lab;") == "&amp;lab;");
    const std::vector<std::string> adversarial = {
        "",       "&",          "&amp;",  "&lab;",        "&rab;&lab;",
        "a ⟨sr⟩ b", "&&⟨⟩",      "x &amp;lab; y", "⟨/sen⟩⟨sen⟩", "&amp;amp;&lab;sr&rab;"};
    for (const std::string& text : adversarial) {
        INFO("text: ", text);
        CHECK(unescape_markers(escape_markers(text)) == text);
    }
    // escaped output never contains a live marker
    for (const std::string& marker : marker_tokens())
        CHECK(escape_markers("x " + marker + " y").find(marker) == std::string::npos);
}

TEST_CASE("format and parse round trip over random rationales") {
    const std::vector<std::string> words = {"mood",  "bright", "&amp;", "&lab;", "⟨sr⟩",
                                            "x&y",   "photo",  "warm,", "!",     "⟨sen⟩",
                                            "&rab;", "tone"};
    const std::vector<std::string> labels = {"positive", "neutral", "negative"};
    RandomStream rng(7);
    for (int i = 0; i < 1000; ++i) {
        Task task = rng.uniform_int(2) == 0 ? Task::kSRG : Task::kIRG;
        const std::string& label = labels[static_cast<std::size_t>(rng.uniform_int(3))];
        int n = rng.uniform_int(9);
        std::string rationale;
        for (int w = 0; w < n; ++w) {
            if (w) rationale += ' ';
            rationale += words[static_cast<std::size_t>(rng.uniform_int(
                static_cast<int>(words.size())))];
        }
        std::string text = format_target(task, label, rationale);
        ParsedOutput parsed = parse_output(task, text);
        INFO("iteration ", i, " target: ", text);
        CHECK(parsed.sentiment == sentiment_from_label(label));
        REQUIRE(parsed.rationale.has_value());
        CHECK(*parsed.rationale == rationale);
    }
    // SC targets carry no rationale in either direction
    std::string sc = format_target(Task::kSC, "neutral", std::nullopt);
    CHECK(sc == "⟨sen⟩ neutral ⟨/sen⟩");
    ParsedOutput parsed = parse_output(Task::kSC, sc);
    CHECK(parsed.sentiment == Sentiment::kNeutral);
    CHECK_FALSE(parsed.rationale.has_value());
    CHECK_THROWS_AS(format_target(Task::kSC, "neutral", std::string("extra")),
                    std::invalid_argument);
    CHECK_THROWS_AS(format_target(Task::kSRG, "neutral", std::nullopt), std::invalid_argument);
    CHECK_THROWS_AS(format_target(Task::kSRG, "meh", std::string("r")), std::invalid_argument);
}

TEST_CASE("parser is total on fuzzed bytes") {
    RandomStream rng(99);
    const std::vector<std::string> seeds = {"⟨sen⟩", "⟨/sen⟩", "⟨sr⟩", "&lab;", "positive", " "};
    int bytes_fed = 0;
    while (bytes_fed < 10000) {
        int len = rng.uniform_int(40);
        std::string text;
        for (int b = 0; b < len; ++b) {
            if (rng.uniform_int(5) == 0) {
                text += seeds[static_cast<std::size_t>(
                    rng.uniform_int(static_cast<int>(seeds.size())))];
            } else {
                text += static_cast<char>(rng.uniform_int(256));
            }
        }
        bytes_fed += static_cast<int>(text.size()) + 1;
        for (Task task : {Task::kSC, Task::kSRG, Task::kIRG})
            CHECK_NOTHROW(parse_output(task, text));
    }
}

TEST_CASE("parse examples pin the first-span semantics") {
    ParsedOutput p = parse_output(Task::kSC, "⟨sen⟩positive⟨/sen⟩");
    CHECK(p.sentiment == Sentiment::kPositive);

    p = parse_output(Task::kSC, "⟨sen⟩ ⟨/sen⟩");
    CHECK(p.sentiment == Sentiment::kUndiscerned);

    p = parse_output(Task::kSC, "⟨/sen⟩ positive ⟨sen⟩");
    CHECK(p.sentiment == Sentiment::kUndiscerned);

    // nested open: the inner text is not a valid token
    p = parse_output(Task::kSC, "⟨sen⟩ ⟨sen⟩ positive ⟨/sen⟩");
    CHECK(p.sentiment == Sentiment::kUndiscerned);

    // the first well-formed span wins
    p = parse_output(Task::kSRG, "⟨sr⟩ r1 ⟨/sr⟩ ⟨sr⟩ r2 ⟨/sr⟩ ⟨sen⟩ negative ⟨/sen⟩");
    CHECK(p.sentiment == Sentiment::kNegative);
    REQUIRE(p.rationale.has_value());
    CHECK(*p.rationale == "r1");

    // missing rationale close leaves the rationale empty but keeps sentiment
    p = parse_output(Task::kIRG, "⟨ir⟩ half open ⟨sen⟩ neutral ⟨/sen⟩");
    CHECK(p.sentiment == Sentiment::kNeutral);
    CHECK_FALSE(p.rationale.has_value());
}

TEST_CASE("input sequences follow the branch order") {
    data::Sample with_obj = make_sample("a", "he waves", "he", "positive", true,
                                        "smiling face", "warm dusk", "r", "r");
    data::Sample no_obj = make_sample("b", "lovely park", "park", "neutral", false, "",
                                      "green calm field", "r", "r");

    CHECK(build_input(Task::kSC, with_obj) ==
          "⟨sc⟩ ⟨sep⟩ he waves ⟨sep⟩ smiling face ⟨sep⟩ he");
    CHECK(build_input(Task::kSRG, no_obj) ==
          "⟨srg⟩ ⟨sep⟩ green calm field ⟨sep⟩ lovely park ⟨sep⟩ park");

    // the task token is the only difference between task variants
    std::string sc = build_input(Task::kSC, no_obj);
    std::string irg = build_input(Task::kIRG, no_obj);
    CHECK(sc.substr(sc.find("⟨sep⟩")) == irg.substr(irg.find("⟨sep⟩")));

    InputPolicy no_od;
    no_od.use_od = false;
    CHECK(build_input(Task::kSC, with_obj, no_od) ==
          "⟨sc⟩ ⟨sep⟩ warm dusk ⟨sep⟩ he waves ⟨sep⟩ he");

    InputPolicy no_caption;
    no_caption.use_caption = false;
    CHECK(build_input(Task::kSC, no_obj, no_caption) ==
          "⟨sc⟩ ⟨sep⟩ lovely park ⟨sep⟩ park");

    InputPolicy generic;
    generic.aesthetic_caption = false;
    CHECK_THROWS_AS(build_input(Task::kSC, no_obj, generic), std::invalid_argument);
    no_obj.gc = "a park photo";
    CHECK(build_input(Task::kSC, no_obj, generic) ==
          "⟨sc⟩ ⟨sep⟩ a park photo ⟨sep⟩ lovely park ⟨sep⟩ park");

    data::Sample missing_od = with_obj;
    missing_od.od.reset();
    CHECK_THROWS_AS(build_input(Task::kSC, missing_od), std::invalid_argument);
    data::Sample missing_caption = no_obj;
    missing_caption.ac.clear();
    missing_caption.gc.reset();
    CHECK_THROWS_AS(build_input(Task::kSC, missing_caption), std::invalid_argument);
}

TEST_CASE("generation loss matches hand values") {
    // near one-hot logits: negligible loss
    Mat hot = Mat::Zero(2, 4);
    hot(0, 1) = 50;
    hot(1, 3) = 50;
    CHECK(generation_loss({hot}, {{1, 3}}) == doctest::Approx(0).epsilon(1e-12));

    // uniform logits over 4 classes, 3 steps: 3 log 4
    Mat uniform = Mat::Zero(3, 4);
    CHECK(generation_loss({uniform}, {{0, 1, 2}}) == doctest::Approx(3 * std::log(4.0)));

    // mean over samples: duplication leaves the value unchanged
    double one = generation_loss({uniform}, {{0, 1, 2}});
    double two = generation_loss({uniform, uniform}, {{0, 1, 2}, {0, 1, 2}});
    CHECK(two == doctest::Approx(one));

    // shift invariance of the row softmax
    Mat shifted = uniform.array() + 123.0;
    CHECK(generation_loss({shifted}, {{0, 1, 2}}) == doctest::Approx(one));

    CHECK_THROWS_AS(generation_loss({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(generation_loss({uniform}, {}), std::invalid_argument);
    CHECK_THROWS_AS(generation_loss({uniform}, {{0, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(generation_loss({uniform}, {{0, 1, 4}}), std::invalid_argument);
    CHECK_THROWS_AS(generation_loss({uniform}, {{0, 1, -1}}), std::invalid_argument);

    // agreement with the tape op it mirrors
    RandomStream rng(17);
    Mat logits(5, 7);
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 7; ++c) logits(r, c) = rng.normal();
    std::vector<int> targets = {3, 0, 6, 2, 5};
    ad::Tape tape;
    ad::Value l = tape.constant(logits);
    double via_tape = ad::sum_all(ad::cross_entropy_rows(l, targets)).scalar();
    CHECK(generation_loss({logits}, {targets}) == doctest::Approx(via_tape).epsilon(1e-12));
}

TEST_CASE("combined objective weights the enabled terms") {
    CHECK(total_loss(1, 1, 1, 1, {0.2, 0.2}) == doctest::Approx(1.2).epsilon(1e-12));
    CHECK(total_loss(2, 4, 6, 8, {0.5, 0.25}) == doctest::Approx(5.5).epsilon(1e-12));
    CHECK(total_loss(1, 0, 0, 0, {0.25, 0.5}) == doctest::Approx(0.25));

    CHECK_THROWS_AS(total_loss(1, 1, 1, 1, {0.0, 0.2}), std::invalid_argument);
    CHECK_THROWS_AS(total_loss(1, 1, 1, 1, {1.0, 0.2}), std::invalid_argument);
    CHECK_THROWS_AS(total_loss(1, 1, 1, 1, {0.2, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(total_loss(1, 1, 1, 1, {0.2, 1.0}), std::invalid_argument);
    CHECK_NOTHROW(total_loss(1, 1, 1, 1, {1e-9, 1.0 - 1e-9}));
    CHECK_THROWS_AS(total_loss(-1, 1, 1, 1, {0.2, 0.2}), std::invalid_argument);
    double nan = std::nan("");
    CHECK_THROWS_AS(total_loss(nan, 1, 1, 1, {0.2, 0.2}), std::invalid_argument);
}

TEST_CASE("vocabulary reserves specials and round trips") {
    Vocab v;
    CHECK(v.size() == 17);
    CHECK(v.id_of("⟨pad⟩") == Vocab::kPad);
    CHECK(v.id_of("⟨bos⟩") == Vocab::kBos);
    CHECK(v.id_of("⟨eos⟩") == Vocab::kEos);
    CHECK(v.id_of("⟨unk⟩") == Vocab::kUnk);
    CHECK(v.id_of(kTokSc) == 4);
    CHECK(v.id_of(kTokSep) == 7);
    CHECK(v.id_of("positive") == 14);
    CHECK(v.id_of("negative") == 16);

    v.add_corpus({"hello world hello", "world again"});
    CHECK(v.id_of("hello") == 17);
    CHECK(v.id_of("world") == 18);
    CHECK(v.id_of("again") == 19);
    CHECK(v.encode("hello mars world") == std::vector<int>{17, Vocab::kUnk, 18});
    CHECK(v.decode({Vocab::kBos, 17, Vocab::kPad, 18, Vocab::kEos}) == "hello world");
    CHECK_THROWS_AS(v.token_of(v.size()), std::out_of_range);

    Vocab restored = Vocab::from_tokens(v.tokens());
    CHECK(restored.tokens() == v.tokens());

    std::vector<std::string> bad = v.tokens();
    bad[0] = "pad";
    CHECK_THROWS_AS(Vocab::from_tokens(bad), std::invalid_argument);
    std::vector<std::string> dup = v.tokens();
    dup.push_back("hello");
    CHECK_THROWS_AS(Vocab::from_tokens(dup), std::invalid_argument);
    CHECK_THROWS_AS(Vocab::from_tokens({"⟨pad⟩"}), std::invalid_argument);
}

TEST_CASE("model memorizes one pair and decodes it greedily") {
    Vocab v;
    v.add_corpus({"the quick fox jumps", "lazy dog sleeps"});
    ModelConfig mc;
    mc.dim = 16;
    mc.layers = 1;
    mc.ffn_hidden = 32;
    mc.max_len = 16;
    Seq2Seq model(mc, v.size());
    ad::ParamStore store;
    model.init_params(store, 5);
    CHECK(store.count() == model.param_names().size());

    std::vector<int> input = v.encode("the quick fox jumps");
    std::vector<int> target = v.encode("lazy dog sleeps");

    double first = 0, last = 0;
    ad::AdamWConfig oc;
    oc.lr = 1e-2;
    ad::AdamW opt(oc);
    for (int step = 0; step < 60; ++step) {
        ad::Tape tape;
        ad::ParamSession ps(store, tape);
        ad::Value loss = model.sample_loss(ps, input, target);
        if (step == 0) first = loss.scalar();
        last = loss.scalar();
        tape.backward(loss);
        opt.step(store, ps.grads());
    }
    CHECK(last < 0.5 * first);

    std::vector<int> out = model.generate(store, input, 8);
    CHECK(out == target);
    // greedy decoding is deterministic
    CHECK(model.generate(store, input, 8) == out);

    CHECK_THROWS_AS(
        [&] {
            ad::Tape tape;
            ad::ParamSession ps(store, tape);
            model.sample_loss(ps, {}, target);
        }(),
        std::invalid_argument);
    CHECK_THROWS_AS(
        [&] {
            ad::Tape tape;
            ad::ParamSession ps(store, tape);
            model.sample_loss(ps, input, {});
        }(),
        std::invalid_argument);
}

TEST_CASE("visual prefix feeds the encoder") {
    Vocab v;
    v.add_corpus({"a b c"});
    ModelConfig mc;
    mc.dim = 12;
    mc.layers = 1;
    mc.ffn_hidden = 16;
    mc.max_len = 12;
    mc.visual_prefix = true;
    mc.visual_dim = 4;
    Seq2Seq model(mc, v.size());
    ad::ParamStore store;
    model.init_params(store, 9);

    std::vector<int> input = v.encode("a b");
    std::vector<int> target = v.encode("c");
    Eigen::VectorXd v1 = Eigen::VectorXd::LinSpaced(4, 0.1, 0.4);
    Eigen::VectorXd v2 = Eigen::VectorXd::LinSpaced(4, -0.9, 0.3);

    auto loss_with = [&](const Eigen::VectorXd* vis) {
        ad::Tape tape;
        ad::ParamSession ps(store, tape);
        return model.sample_loss(ps, input, target, vis).scalar();
    };
    CHECK(loss_with(&v1) != doctest::Approx(loss_with(&v2)).epsilon(1e-12));
    CHECK_THROWS_AS(loss_with(nullptr), std::invalid_argument);
    Eigen::VectorXd wrong = Eigen::VectorXd::Zero(5);
    CHECK_THROWS_AS(loss_with(&wrong), std::invalid_argument);
}

TEST_CASE("srg and irg gradients vanish as alpha approaches one") {
    Vocab v;
    std::vector<data::Sample> samples = toy_samples();
    v = build_vocab(samples, {});
    ModelConfig mc;
    mc.dim = 16;
    mc.layers = 1;
    mc.ffn_hidden = 24;
    mc.max_len = 48;
    Seq2Seq model(mc, v.size());
    ad::ParamStore store;
    model.init_params(store, 21);

    const data::Sample& s = samples[0];
    auto encode_in = [&](Task t) { return v.encode(build_input(t, s, {})); };
    auto encode_tgt = [&](Task t) {
        std::optional<std::string> r;
        if (t == Task::kSRG) r = *s.sr;
        if (t == Task::kIRG) r = *s.ir;
        return v.encode(format_target(t, s.label, r));
    };

    const double alpha = 1.0 - 1e-9;
    auto grads_of = [&](bool include_generation) {
        ad::Tape tape;
        ad::ParamSession ps(store, tape);
        ad::Value total = ad::scalar_mul(
            model.sample_loss(ps, encode_in(Task::kSC), encode_tgt(Task::kSC)), alpha);
        if (include_generation) {
            ad::Value srg = model.sample_loss(ps, encode_in(Task::kSRG), encode_tgt(Task::kSRG));
            ad::Value irg = model.sample_loss(ps, encode_in(Task::kIRG), encode_tgt(Task::kIRG));
            total = ad::add(total, ad::scalar_mul(ad::add(srg, irg), (1.0 - alpha) / 2.0));
        }
        tape.backward(total);
        return ps.grads();
    };

    auto with_gen = grads_of(true);
    auto sc_only = grads_of(false);
    REQUIRE(with_gen.size() == sc_only.size());
    double worst = 0;
    for (const auto& [name, g] : with_gen) {
        double diff = (g - sc_only.at(name)).cwiseAbs().maxCoeff();
        worst = std::max(worst, diff);
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("trainer validates configuration and inputs") {
    features::SyntheticFeatureProvider provider(8, 11);
    std::vector<data::Sample> samples = toy_samples();
    Vocab v = build_vocab(samples, {});

    TrainConfig cfg = small_config();
    cfg.epochs = 0;
    CHECK_THROWS_AS(Trainer(cfg, v, &provider), std::invalid_argument);
    cfg = small_config();
    cfg.weights.alpha = 1.0;
    CHECK_THROWS_AS(Trainer(cfg, v, &provider), std::invalid_argument);
    cfg = small_config();
    cfg.lr = 0;
    CHECK_THROWS_AS(Trainer(cfg, v, &provider), std::invalid_argument);

    // alignment without a provider, and dimension mismatches
    cfg = small_config();
    CHECK_THROWS_AS(Trainer(cfg, v, nullptr), std::invalid_argument);
    features::SyntheticFeatureProvider wrong_dim(6, 11);
    CHECK_THROWS_AS(Trainer(cfg, v, &wrong_dim), std::invalid_argument);
    cfg.enable_lsa = false;
    CHECK_NOTHROW(Trainer(cfg, v, nullptr));

    // missing rationale surfaces by sample id
    cfg = small_config();
    Trainer t(cfg, v, &provider);
    data::Sample bare = samples[0];
    bare.sr.reset();
    CHECK_THROWS_WITH_AS(static_cast<void>(t.encode_target(bare, Task::kSRG)),
                         "sample t1 has no semantic rationale", std::runtime_error);

    CHECK(t.enabled_tasks() == std::vector<Task>{Task::kSC, Task::kSRG, Task::kIRG});
    cfg.enable_srg = false;
    Trainer t2(cfg, v, &provider);
    CHECK(t2.enabled_tasks() == std::vector<Task>{Task::kSC, Task::kIRG});
}

TEST_CASE("train config serialization round trips") {
    TrainConfig cfg = toy_config();
    cfg.enable_srg = false;
    cfg.aesthetic_caption = false;
    cfg.weights = {0.3, 0.4};
    cfg.model.visual_prefix = true;
    cfg.model.visual_dim = 8;
    cfg.lsa.gumbel_form = lsa::GumbelForm::kCanonicalLogits;
    TrainConfig back = train_config_from_json(train_config_to_json(cfg));
    CHECK(back.epochs == cfg.epochs);
    CHECK(back.lr == cfg.lr);
    CHECK(back.weights.alpha == cfg.weights.alpha);
    CHECK(back.weights.lambda == cfg.weights.lambda);
    CHECK(back.enable_srg == cfg.enable_srg);
    CHECK(back.aesthetic_caption == cfg.aesthetic_caption);
    CHECK(back.model.visual_prefix == cfg.model.visual_prefix);
    CHECK(back.lsa.gumbel_form == cfg.lsa.gumbel_form);
    CHECK(back.lsa.min_keep == cfg.lsa.min_keep);

    TrainConfig bad = toy_config();
    bad.weights.alpha = 0.0;
    CHECK_THROWS_AS(train_config_from_json(train_config_to_json(bad)), std::invalid_argument);
}

TEST_CASE("metrics rows expose exactly the enabled loss terms") {
    features::SyntheticFeatureProvider provider(8, 11);
    std::vector<data::Sample> samples = toy_samples();
    samples.resize(4);
    Vocab v = build_vocab(samples, {});

    auto keys_for = [&](bool srg, bool irg, bool lsa) {
        TrainConfig cfg = small_config();
        cfg.epochs = 1;
        cfg.batch = 4;
        cfg.enable_srg = srg;
        cfg.enable_irg = irg;
        cfg.enable_lsa = lsa;
        Trainer t(cfg, v, &provider);
        fs::path dir = fresh_dir("masckit_test_lossterms");
        TrainOutcome outcome = t.run(samples, samples, dir);
        REQUIRE(outcome.rows.size() == 2);
        std::set<std::string> train_keys = loss_keys(outcome.rows[0]);
        CHECK(train_keys == loss_keys(outcome.rows[1]));
        // rows persisted to the metrics log carry the same keys
        std::string line = read_file(dir / "metrics.jsonl");
        EpochRow decoded = decode_epoch_row(line.substr(0, line.find('\n')));
        CHECK(loss_keys(decoded) == train_keys);
        return train_keys;
    };

    CHECK(keys_for(true, true, true) ==
          std::set<std::string>{"sc", "srg", "irg", "align", "total"});
    CHECK(keys_for(false, true, true) == std::set<std::string>{"sc", "irg", "align", "total"});
    CHECK(keys_for(true, true, false) == std::set<std::string>{"sc", "srg", "irg", "total"});
    CHECK(keys_for(false, false, false) == std::set<std::string>{"sc", "total"});
}

TEST_CASE("training is deterministic across fresh runs") {
    features::SyntheticFeatureProvider provider(8, 11);
    std::vector<data::Sample> samples = toy_samples();
    samples.resize(4);
    Vocab v = build_vocab(samples, {});
    TrainConfig cfg = small_config();

    fs::path dir_a = fresh_dir("masckit_test_det_a");
    fs::path dir_b = fresh_dir("masckit_test_det_b");
    Trainer(cfg, v, &provider).run(samples, samples, dir_a);
    Trainer(cfg, v, &provider).run(samples, samples, dir_b);
    CHECK(read_file(dir_a / "metrics.jsonl") == read_file(dir_b / "metrics.jsonl"));
    CHECK(read_file(dir_a / "last.json") == read_file(dir_b / "last.json"));
}

TEST_CASE("resume restores the optimizer mid run") {
    features::SyntheticFeatureProvider provider(8, 11);
    std::vector<data::Sample> samples = toy_samples();
    samples.resize(4);
    Vocab v = build_vocab(samples, {});
    TrainConfig cfg = small_config();

    fs::path one_shot = fresh_dir("masckit_test_resume_a");
    Trainer(cfg, v, &provider).run(samples, samples, one_shot);

    fs::path staged = fresh_dir("masckit_test_resume_b");
    Trainer first(cfg, v, &provider);
    first.run(samples, samples, staged, 1);
    CHECK(first.epoch() == 1);

    Trainer resumed = Trainer::resume(staged / "last.json", &provider);
    CHECK(resumed.epoch() == 1);
    CHECK(resumed.step() == first.step());
    CHECK(resumed.vocab().tokens() == v.tokens());
    resumed.run(samples, samples, staged);
    CHECK(resumed.epoch() == cfg.epochs);

    CHECK(read_file(one_shot / "metrics.jsonl") == read_file(staged / "metrics.jsonl"));
    CHECK(read_file(one_shot / "last.json") == read_file(staged / "last.json"));
}

TEST_CASE("diverging losses abort with context") {
    features::SyntheticFeatureProvider provider(8, 11);
    std::vector<data::Sample> samples = toy_samples();
    Vocab v = build_vocab(samples, {});
    TrainConfig cfg = small_config();
    cfg.epochs = 3;
    cfg.lr = 1e200;
    Trainer t(cfg, v, &provider);
    fs::path dir = fresh_dir("masckit_test_diverge");
    try {
        t.run(samples, samples, dir);
        FAIL("expected a divergence error");
    } catch (const std::runtime_error& e) {
        std::string message = e.what();
        CHECK(message.find("non-finite") != std::string::npos);
        CHECK(message.find("epoch") != std::string::npos);
    }
}

TEST_CASE("toy corpus overfits within two hundred steps") {
    features::SyntheticFeatureProvider provider(8, 11);
    std::vector<data::Sample> samples = toy_samples();
    Vocab v = build_vocab(samples, {});
    TrainConfig cfg = toy_config();
    Trainer t(cfg, v, &provider);
    fs::path dir = fresh_dir("masckit_test_overfit");
    TrainOutcome outcome = t.run(samples, samples, dir);

    CHECK(outcome.steps <= 200);
    INFO("initial ", outcome.initial_total, " final ", outcome.final_total);
    CHECK(outcome.final_total < 0.5 * outcome.initial_total);

    const EpochRow& last_train = outcome.rows[outcome.rows.size() - 2];
    REQUIRE(last_train.split == "train");
    INFO("final train accuracy ", last_train.acc);
    CHECK(last_train.acc >= 7.0 / 8.0);

    // the trained model answers the classification task sample by sample
    auto [report, loss] = t.evaluate_split(samples);
    CHECK(report.accuracy >= 7.0 / 8.0);
    CHECK(loss.count("total") == 1);

    // best checkpoint exists and reloads to the same dev accuracy
    Trainer best = Trainer::resume(dir / "best.json", &provider);
    auto [best_report, best_loss] = best.evaluate_split(samples);
    CHECK(best_report.accuracy >= outcome.best_dev_acc - 1e-12);
}
