// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint container ("CSCK"): a JSON meta blob plus named float32 tensors.
// Training code stores model parameters, optimizer moments and the generator
// state, which is enough to resume a run bit-for-bit.
//
// Layout (all little-endian):
//   magic 'CSCK' | u8 version | u8 x3 reserved | u32 meta_len | meta JSON
//   u32 n_tensors | per tensor: u16 name_len, name, u8 rank, u32 dims[rank],
//   f32 data[numel]

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "csiaug/io/bytes.hpp"
#include "csiaug/nn/core.hpp"
#include "csiaug/nn/optim.hpp"
#include "json.hpp"

namespace csiaug::nn {

inline constexpr char kCheckpointMagic[4] = {'C', 'S', 'C', 'K'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

struct Checkpoint {
    nlohmann::json meta = nlohmann::json::object();
    std::vector<std::pair<std::string, TensorF>> tensors;  // insertion-ordered

    void add(const std::string& name, TensorF tensor) {
        require<ConfigError>(find(name) == nullptr, "Checkpoint: duplicate tensor " + name);
        tensors.emplace_back(name, std::move(tensor));
    }

    const TensorF* find(const std::string& name) const {
        for (const auto& [n, t] : tensors)
            if (n == name) return &t;
        return nullptr;
    }

    const TensorF& get(const std::string& name) const {
        const TensorF* t = find(name);
        require<IoError>(t != nullptr, "Checkpoint: missing tensor " + name);
        return *t;
    }
};

// u64 values go through hex strings: JSON numbers cannot hold them exactly.
inline nlohmann::json rng_state_to_json(const Rng::State& state) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto word : state) {
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(word));
        out.push_back(std::string(buf));
    }
    return out;
}

inline Rng::State rng_state_from_json(const nlohmann::json& j) {
    require<IoError>(j.is_array() && j.size() == 4, "rng state: expected 4 words");
    Rng::State state{};
    for (std::size_t i = 0; i < 4; ++i)
        state[i] = std::stoull(j[i].get<std::string>(), nullptr, 16);
    return state;
}

inline void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    std::ofstream os(path, std::ios::binary);
    require<IoError>(os.good(), "write_checkpoint: cannot open " + path.string());

    io::write_bytes(os, {kCheckpointMagic, 4});
    io::write_u8(os, kCheckpointVersion);
    io::write_u8(os, 0);
    io::write_u8(os, 0);
    io::write_u8(os, 0);
    const std::string meta = ck.meta.dump();
    io::write_u32(os, static_cast<std::uint32_t>(meta.size()));
    io::write_bytes(os, {meta.data(), meta.size()});

    io::write_u32(os, static_cast<std::uint32_t>(ck.tensors.size()));
    for (const auto& [name, tensor] : ck.tensors) {
        require<ConfigError>(name.size() <= 0xffff, "write_checkpoint: name too long");
        io::write_u16(os, static_cast<std::uint16_t>(name.size()));
        io::write_bytes(os, {name.data(), name.size()});
        io::write_u8(os, static_cast<std::uint8_t>(tensor.rank()));
        for (int d = 0; d < tensor.rank(); ++d)
            io::write_u32(os, static_cast<std::uint32_t>(tensor.dim(d)));
        io::write_f32_array(os, tensor.flat());
    }
    require<IoError>(os.good(), "write_checkpoint: write failed for " + path.string());
}

inline Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    require<IoError>(is.good(), "read_checkpoint: cannot open " + path.string());

    require<IoError>(io::read_string(is, 4) == std::string(kCheckpointMagic, 4),
                     "read_checkpoint: bad magic in " + path.string());
    require<IoError>(io::read_u8(is) == kCheckpointVersion, "read_checkpoint: unsupported version");
    io::read_u8(is);
    io::read_u8(is);
    io::read_u8(is);

    Checkpoint ck;
    const auto meta_len = io::read_u32(is);
    ck.meta = nlohmann::json::parse(io::read_string(is, meta_len));

    const auto n_tensors = io::read_u32(is);
    ck.tensors.reserve(n_tensors);
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        const auto name_len = io::read_u16(is);
        const std::string name = io::read_string(is, name_len);
        const auto rank = io::read_u8(is);
        require<IoError>(rank <= 4, "read_checkpoint: rank > 4");
        std::vector<int> shape(rank);
        for (auto& d : shape) d = static_cast<int>(io::read_u32(is));
        TensorF tensor(shape);
        io::read_f32_array(is, tensor.flat());
        ck.tensors.emplace_back(name, std::move(tensor));
    }
    return ck;
}

// --- parameter/optimizer state bridging ------------------------------------

template <typename S>
inline void save_params(Checkpoint& ck, const Params<S>& params, const std::string& prefix = "") {
    for (const auto& p : params) ck.add(prefix + p.name, p.value->template cast<float>());
}

template <typename S>
inline void load_params(const Checkpoint& ck, const Params<S>& params, const std::string& prefix = "") {
    for (const auto& p : params) {
        const TensorF& stored = ck.get(prefix + p.name);
        require<ShapeError>(stored.shape() == p.value->shape(),
                            "load_params: shape mismatch for " + p.name);
        *p.value = stored.template cast<S>();
    }
}

template <typename S>
inline void save_optimizer(Checkpoint& ck, const AdamW<S>& opt) {
    ck.meta["optimizer"] = {{"step_count", opt.step_count},
                            {"lr", opt.lr},
                            {"beta1", opt.beta1},
                            {"beta2", opt.beta2},
                            {"eps", opt.eps},
                            {"weight_decay", opt.weight_decay}};
    for (const auto& [name, m] : opt.first_moments()) ck.add("optim.m." + name, m.template cast<float>());
    for (const auto& [name, v] : opt.second_moments()) ck.add("optim.v." + name, v.template cast<float>());
}

template <typename S>
inline void load_optimizer(const Checkpoint& ck, AdamW<S>& opt, const Params<S>& params) {
    const auto& oj = ck.meta.at("optimizer");
    opt.step_count = oj.at("step_count").get<std::uint64_t>();
    opt.lr = oj.at("lr").get<double>();
    opt.beta1 = oj.at("beta1").get<double>();
    opt.beta2 = oj.at("beta2").get<double>();
    opt.eps = oj.at("eps").get<double>();
    opt.weight_decay = oj.at("weight_decay").get<double>();

    std::map<std::string, Tensor<S>> m, v;
    for (const auto& p : params) {
        m.emplace(p.name, ck.get("optim.m." + p.name).template cast<S>());
        v.emplace(p.name, ck.get("optim.v." + p.name).template cast<S>());
    }
    opt.set_moments(std::move(m), std::move(v));
}

}  // namespace csiaug::nn
