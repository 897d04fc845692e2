// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#include <limits>

#include "catch_amalgamated.hpp"
#include "csiaug/tensor.hpp"

using csiaug::ShapeError;
using csiaug::Tensor;
using csiaug::TensorD;
using csiaug::TensorF;

TEST_CASE("construction zero-fills and records shape", "[tensor]") {
    TensorF t({2, 3, 4});
    CHECK(t.rank() == 3);
    CHECK(t.numel() == 24);
    CHECK(t.dim(0) == 2);
    CHECK(t.dim(-1) == 4);
    for (std::size_t i = 0; i < t.numel(); ++i) CHECK(t[i] == 0.0f);
    CHECK(t.shape_string() == "[2,3,4]");
}

TEST_CASE("row-major indexing is consistent with flat order", "[tensor]") {
    TensorF t({2, 3});
    float v = 0.0f;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j) t.at(i, j) = v++;
    for (std::size_t i = 0; i < 6; ++i) CHECK(t[i] == static_cast<float>(i));

    TensorF u({2, 2, 2, 2});
    u.at(1, 0, 1, 1) = 9.0f;
    CHECK(u[8 + 0 + 2 + 1] == 9.0f);
}

TEST_CASE("arithmetic and axpy", "[tensor]") {
    TensorD a = TensorD::full({4}, 2.0);
    TensorD b = TensorD::full({4}, 3.0);
    a += b;
    CHECK(a.at(0) == 5.0);
    a -= b;
    CHECK(a.at(1) == 2.0);
    a *= 0.5;
    CHECK(a.at(2) == 1.0);
    a.axpy(2.0, b);
    CHECK(a.at(3) == 7.0);

    TensorD wrong({5});
    CHECK_THROWS_AS(a += wrong, ShapeError);
}

TEST_CASE("reductions", "[tensor]") {
    TensorF t({3});
    t.at(0) = 1.0f;
    t.at(1) = -2.0f;
    t.at(2) = 4.0f;
    CHECK(t.sum() == Catch::Approx(3.0));
    CHECK(t.mean() == Catch::Approx(1.0));
    CHECK(t.min_value() == -2.0f);
    CHECK(t.max_value() == 4.0f);
    CHECK(t.all_finite());
    t.at(1) = std::numeric_limits<float>::infinity();
    CHECK_FALSE(t.all_finite());
}

TEST_CASE("reshape preserves data and validates count", "[tensor]") {
    TensorF t({2, 6});
    for (std::size_t i = 0; i < 12; ++i) t[i] = static_cast<float>(i);
    TensorF r = t.reshaped({3, 4});
    CHECK(r.dim(0) == 3);
    for (std::size_t i = 0; i < 12; ++i) CHECK(r[i] == static_cast<float>(i));
    CHECK_THROWS_AS(t.reshaped({5}), ShapeError);
}

TEST_CASE("cast converts element type", "[tensor]") {
    TensorD d({2});
    d.at(0) = 1.25;
    d.at(1) = -0.5;
    TensorF f = d.cast<float>();
    CHECK(f.at(0) == 1.25f);
    CHECK(f.at(1) == -0.5f);
}
