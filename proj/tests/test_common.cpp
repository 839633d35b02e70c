// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "masc/common/fsio.hpp"
#include "masc/common/hash.hpp"
#include "masc/common/random.hpp"
#include "masc/common/text.hpp"

namespace fs = std::filesystem;
using namespace masc;

TEST_CASE("fnv1a64 is stable and separator-aware") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") != fnv1a64("b"));
    CHECK(fnv1a64("ab") != fnv1a64("a"));
    // combine() injects a separator, so ("ab","c") differs from ("a","bc")
    CHECK(fnv1a64_combine(fnv1a64("ab"), "c") != fnv1a64_combine(fnv1a64("a"), "bc"));
    CHECK(hex64(0) == "0000000000000000");
    CHECK(hex64(0xdeadbeefull) == "00000000deadbeef");
}

TEST_CASE("RandomStream reproducibility and ranges") {
    RandomStream a(42), b(42), c(43);
    bool all_equal = true;
    bool any_diff_seed = false;
    for (int i = 0; i < 1000; ++i) {
        double ua = a.uniform();
        double ub = b.uniform();
        double uc = c.uniform();
        if (ua != ub) all_equal = false;
        if (ua != uc) any_diff_seed = true;
        CHECK(ua >= 0.0);
        CHECK(ua < 1.0);
    }
    CHECK(all_equal);
    CHECK(any_diff_seed);
}

TEST_CASE("RandomStream uniform_open avoids endpoints") {
    RandomStream r(7);
    for (int i = 0; i < 10000; ++i) {
        double u = r.uniform_open();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("RandomStream uniform_int covers the range uniformly enough") {
    RandomStream r(11);
    std::vector<int> counts(5, 0);
    for (int i = 0; i < 50000; ++i) {
        std::uint64_t k = r.uniform_int(5);
        REQUIRE(k < 5);
        counts[static_cast<std::size_t>(k)]++;
    }
    for (int c : counts) {
        CHECK(c > 9000);
        CHECK(c < 11000);
    }
}

TEST_CASE("RandomStream gumbel and normal are finite") {
    RandomStream r(3);
    for (int i = 0; i < 10000; ++i) {
        CHECK(std::isfinite(r.gumbel()));
        CHECK(std::isfinite(r.normal()));
    }
}

TEST_CASE("text helpers") {
    CHECK(split_ws("  a  b\tc\n") == std::vector<std::string>{"a", "b", "c"});
    CHECK(split_ws("") == std::vector<std::string>{});
    CHECK(token_count("one two  three") == 3);
    CHECK(join({"a", "b"}, ", ") == "a, b");
    CHECK(truncate_tokens("a b c d", 2) == "a b");
    CHECK(truncate_tokens("a b", 5) == "a b");
    CHECK(to_lower("AbC") == "abc");
    CHECK(trim("  x  ") == "x");
    CHECK(replace_all("a-b-c", "-", "+") == "a+b+c");
    CHECK(strip_punct("great!") == "great");
}

TEST_CASE("atomic_write_file then read_file round trips") {
    fs::path dir = fs::temp_directory_path() / "masckit_fsio_test";
    fs::create_directories(dir);
    fs::path p = dir / "payload.txt";
    atomic_write_file(p.string(), "line1\nline2\n");
    CHECK(read_file(p.string()) == "line1\nline2\n");
    auto lines = read_lines(p.string());
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "line1");
    CHECK(lines[1] == "line2");
    // overwrite is atomic; stale temp files must not accumulate
    atomic_write_file(p.string(), "v2");
    CHECK(read_file(p.string()) == "v2");
    int extras = 0;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path() != p) ++extras;
    CHECK(extras == 0);
    fs::remove_all(dir);
}

TEST_CASE("ScopedFileLock serializes access") {
    fs::path dir = fs::temp_directory_path() / "masckit_lock_test";
    fs::create_directories(dir);
    fs::path p = dir / "x.lock";
    {
        ScopedFileLock l1(p.string());
        CHECK(l1.held());
    }
    {
        ScopedFileLock l2(p.string());
        CHECK(l2.held());
    }
    fs::remove_all(dir);
}
