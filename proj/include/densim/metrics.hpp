// SPDX-License-Identifier: Apache-2.0
//
// densim: system-level simulator for mmWave network densification
// Copyright (C) 2026 The densim authors
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

#pragma once

#include "densim/mac.hpp"

#include <cstdint>
#include <vector>

namespace densim::metrics
{

/// Empirical CDF: sorted samples with probabilities i/n.
struct Cdf
{
    std::vector<double> values;
    std::vector<double> probabilities;

    std::size_t size() const { return values.size(); }
    /// q in [0, 100]; linear interpolation between order statistics at position q/100 * (n - 1).
    double percentile(double q) const;
};

/// Throws std::invalid_argument for an empty sample set or NaN samples.
Cdf build_cdf(std::vector<double> samples);

/// (sum x)^2 / (n sum x^2). Throws std::invalid_argument for empty, negative or all-zero input.
double jain(const std::vector<double> &throughputs);

struct McsBin
{
    std::uint64_t acks = 0;
    std::uint64_t nacks = 0;

    std::uint64_t total() const { return acks + nacks; }
};

/// ACK/NACK counts per MCS index; the histogram has max(n_mcs, highest index + 1) bins.
std::vector<McsBin> mcs_histogram(const std::vector<mac::TbRecord> &trace, std::size_t n_mcs = 16);

/// Median of a sample set (percentile 50 of its CDF).
double median(const std::vector<double> &samples);

} // namespace densim::metrics
