// SPDX-License-Identifier: Apache-2.0
//
// cfmimo — cell-free massive MIMO downlink simulator
// Copyright (C) 2026 The cfmimo authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef cfmimo_rng_H
#define cfmimo_rng_H

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

namespace cfmimo
{

// Finalizer of the splitmix64 generator; whitens derived seeds so that
// related inputs (master seed + small indices) yield uncorrelated streams.
inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Stable sub-stream derivation: FNV-1a over the label bytes, mixed with the
// master seed and integer indices, then whitened. Adding an unrelated label
// never perturbs the stream of an existing one.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                 std::uint64_t index = 0, std::uint64_t stream = 0)
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto mix_byte = [&h](unsigned char b) { h = (h ^ b) * 0x100000001B3ULL; };
    for (char c : label)
        mix_byte(static_cast<unsigned char>(c));
    for (int i = 0; i < 8; ++i)
        mix_byte(static_cast<unsigned char>(master >> (8 * i)));
    for (int i = 0; i < 8; ++i)
        mix_byte(static_cast<unsigned char>(index >> (8 * i)));
    for (int i = 0; i < 8; ++i)
        mix_byte(static_cast<unsigned char>(stream >> (8 * i)));
    return splitmix64(h);
}

// Deterministic random stream. The mt19937_64 engine is fully specified by
// the C++ standard; Gaussians are produced with an explicit Box-Muller
// transform instead of std::normal_distribution, whose output is
// implementation-defined. Identical seeds therefore give identical draws on
// every platform.
class Rng
{
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Standard normal via Box-Muller; consumes exactly two uniforms per call
    double gaussian()
    {
        double u1 = 1.0 - uniform(); // (0, 1], keeps log() finite
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    // Circularly-symmetric complex Gaussian CN(0, variance)
    std::complex<double> cgaussian(double variance)
    {
        double s = std::sqrt(0.5 * variance);
        double re = gaussian();
        double im = gaussian();
        return {s * re, s * im};
    }

  private:
    std::mt19937_64 engine_;
};

} // namespace cfmimo

#endif
