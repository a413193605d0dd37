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

#include "densim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace densim::metrics
{

double Cdf::percentile(double q) const
{
    if (values.empty())
        throw std::invalid_argument("percentile of an empty CDF");
    if (!(q >= 0.0 && q <= 100.0))
        throw std::invalid_argument("percentile: q outside [0, 100]");
    const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

Cdf build_cdf(std::vector<double> samples)
{
    if (samples.empty())
        throw std::invalid_argument("build_cdf: no samples");
    for (double s : samples)
        if (std::isnan(s))
            throw std::invalid_argument("build_cdf: NaN sample");
    std::sort(samples.begin(), samples.end());
    Cdf c;
    c.values = std::move(samples);
    const double n = static_cast<double>(c.values.size());
    c.probabilities.resize(c.values.size());
    for (std::size_t i = 0; i < c.values.size(); ++i)
        c.probabilities[i] = static_cast<double>(i + 1) / n;
    return c;
}

double jain(const std::vector<double> &throughputs)
{
    if (throughputs.empty())
        throw std::invalid_argument("jain: no users");
    double sum = 0.0, sq = 0.0;
    for (double t : throughputs)
    {
        if (!(t >= 0.0))
            throw std::invalid_argument("jain: negative or NaN throughput");
        sum += t;
        sq += t * t;
    }
    if (sq == 0.0)
        throw std::invalid_argument("jain: all throughputs are zero");
    return sum * sum / (static_cast<double>(throughputs.size()) * sq);
}

std::vector<McsBin> mcs_histogram(const std::vector<mac::TbRecord> &trace, std::size_t n_mcs)
{
    std::vector<McsBin> bins(n_mcs);
    for (const auto &tb : trace)
    {
        const auto i = static_cast<std::size_t>(std::max(tb.mcs, 0));
        if (i >= bins.size())
            bins.resize(i + 1);
        (tb.outcome == mac::Outcome::Ack ? bins[i].acks : bins[i].nacks)++;
    }
    return bins;
}

double median(const std::vector<double> &samples) { return build_cdf(samples).percentile(50.0); }

} // namespace densim::metrics
