// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "splatpaint/common.hpp"

using namespace splatpaint;

TEST_CASE("fnv1a64 matches published vectors", "[common]") {
    CHECK(fnv1a64(std::string("")) == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64(std::string("a")) == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64(std::string("foobar")) == 0x85944171f73967e8ULL);
}

TEST_CASE("sigmoid and inverse_sigmoid are mutual inverses", "[common]") {
    for (double x : {-9.0, -2.5, 0.0, 0.3, 4.0}) {
        CHECK(inverse_sigmoid(sigmoid(x)) == Catch::Approx(x).epsilon(1e-12));
    }
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(40.0) == Catch::Approx(1.0));
}

TEST_CASE("rng streams are deterministic per seed", "[common]") {
    Rng a(17), b(17), c(18);
    std::vector<double> va, vb, vc;
    for (int i = 0; i < 100; ++i) {
        va.push_back(a.uniform());
        vb.push_back(b.uniform());
        vc.push_back(c.uniform());
    }
    CHECK(va == vb);
    CHECK(va != vc);
    for (double v : va) {
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("rng child streams are independent of parent draw order", "[common]") {
    Rng parent(5);
    Rng child_before = parent.child(3);
    parent.uniform();
    parent.normal();
    Rng child_after = parent.child(3);
    for (int i = 0; i < 10; ++i) {
        CHECK(child_before.uniform() == child_after.uniform());
    }
    CHECK(Rng(5).child(3).seed() != Rng(5).child(4).seed());
    CHECK(Rng(5).child(3).seed() != Rng(6).child(3).seed());
}

TEST_CASE("rng uniform_index covers range and respects bounds", "[common]") {
    Rng rng(99);
    std::vector<int> seen(7, 0);
    for (int i = 0; i < 2000; ++i) {
        const std::size_t k = rng.uniform_index(7);
        REQUIRE(k < 7);
        seen[k]++;
    }
    for (int count : seen) CHECK(count > 0);
    CHECK(rng.uniform_int(4, 4) == 4);
}

TEST_CASE("rng normal has sane moments", "[common]") {
    Rng rng(123);
    double sum = 0.0, sum2 = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sum2 += x * x;
    }
    CHECK(std::abs(sum / n) < 0.03);
    CHECK(std::abs(sum2 / n - 1.0) < 0.05);
}
