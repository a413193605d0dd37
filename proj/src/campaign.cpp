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

#include "densim/campaign.hpp"

#include "densim/metrics.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace densim::campaign
{

namespace fs = std::filesystem;

namespace
{

std::ofstream open_out(const fs::path &path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    out << std::setprecision(10);
    return out;
}

void write_cdf(const fs::path &path, const char *header, const std::vector<double> &samples)
{
    auto out = open_out(path);
    out << header << '\n';
    if (samples.empty())
        return;
    const auto cdf = metrics::build_cdf(samples);
    for (std::size_t i = 0; i < cdf.size(); ++i)
        out << cdf.values[i] << ',' << cdf.probabilities[i] << '\n';
}

void write_histogram(const fs::path &path, const std::vector<mac::TbRecord> &trace)
{
    auto out = open_out(path);
    out << "mcs,acks,nacks\n";
    const auto bins = metrics::mcs_histogram(trace);
    for (std::size_t i = 0; i < bins.size(); ++i)
        out << i << ',' << bins[i].acks << ',' << bins[i].nacks << '\n';
}

double percentile_or_nan(const std::vector<double> &samples, double q)
{
    return samples.empty() ? std::numeric_limits<double>::quiet_NaN() : metrics::build_cdf(samples).percentile(q);
}

} // namespace

void write_run_outputs(const sim::RunResult &result, const fs::path &dir, bool with_trace)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());

    write_cdf(dir / "cdf_sinr_dl.csv", "value_dB,prob", result.sinr_db[0]);
    write_cdf(dir / "cdf_sinr_ul.csv", "value_dB,prob", result.sinr_db[1]);
    write_cdf(dir / "cdf_tput_dl.csv", "mbps,prob", result.throughput_samples_mbps[0]);
    write_cdf(dir / "cdf_tput_ul.csv", "mbps,prob", result.throughput_samples_mbps[1]);

    {
        auto out = open_out(dir / "fairness.csv");
        out << "deployment,direction,jain\n";
        for (int d = 0; d < 2; ++d)
            out << scenario::to_string(result.deployment) << ',' << to_string(d == 0 ? Direction::Downlink : Direction::Uplink)
                << ',' << result.jain[static_cast<std::size_t>(d)] << '\n';
    }

    write_histogram(dir / "mcs_hist.csv", result.trace);
    std::vector<mac::TbRecord> dl, ul;
    for (const auto &tb : result.trace)
        if (tb.ue_link())
            (tb.direction == Direction::Downlink ? dl : ul).push_back(tb);
    write_histogram(dir / "mcs_hist_dl.csv", dl);
    write_histogram(dir / "mcs_hist_ul.csv", ul);

    {
        auto out = open_out(dir / "associations.csv");
        out << "ue,chain,gnb,relay,out_of_coverage,dl_bps,ul_bps\n";
        for (const auto &[ue, c] : result.associations)
        {
            const auto dl_it = result.ue_throughput_bps[0].find(ue);
            const auto ul_it = result.ue_throughput_bps[1].find(ue);
            out << ue << ',' << scenario::to_string(c.kind) << ',' << c.gnb << ','
                << (c.relay == kNoNode ? std::string("-") : std::to_string(c.relay)) << ','
                << (c.out_of_coverage ? 1 : 0) << ',' << (dl_it == result.ue_throughput_bps[0].end() ? 0.0 : dl_it->second)
                << ',' << (ul_it == result.ue_throughput_bps[1].end() ? 0.0 : ul_it->second) << '\n';
        }
    }

    if (with_trace)
    {
        auto out = open_out(dir / "trace.csv");
        out << "slot,direction,link,prbs,mcs,sinr_db,outcome\n";
        for (const auto &tb : result.trace)
            out << tb.slot << ',' << to_string(tb.direction) << ',' << tb.tx << "->" << tb.rx << ',' << tb.n_prbs << ','
                << tb.mcs << ',' << tb.sinr_db << ',' << (tb.outcome == mac::Outcome::Ack ? "ACK" : "NACK") << '\n';
    }
}

std::array<SummaryRow, 2> summarise_runs(const std::vector<sim::RunResult> &runs)
{
    std::array<SummaryRow, 2> rows;
    for (int d = 0; d < 2; ++d)
    {
        auto &row = rows[static_cast<std::size_t>(d)];
        row.direction = d == 0 ? Direction::Downlink : Direction::Uplink;
        row.n_runs = runs.size();
        if (runs.empty())
            continue;
        row.deployment = runs.front().deployment;
        std::vector<double> sinr, tput, jains;
        for (const auto &r : runs)
        {
            const auto &s = r.sinr_db[static_cast<std::size_t>(d)];
            const auto &t = r.throughput_samples_mbps[static_cast<std::size_t>(d)];
            sinr.insert(sinr.end(), s.begin(), s.end());
            tput.insert(tput.end(), t.begin(), t.end());
            jains.push_back(r.jain[static_cast<std::size_t>(d)]);
        }
        row.sinr_p10 = percentile_or_nan(sinr, 10);
        row.sinr_p50 = percentile_or_nan(sinr, 50);
        row.sinr_p90 = percentile_or_nan(sinr, 90);
        row.tput_p10 = percentile_or_nan(tput, 10);
        row.tput_p50 = percentile_or_nan(tput, 50);
        row.tput_p90 = percentile_or_nan(tput, 90);
        row.jain = metrics::median(jains);
    }
    return rows;
}

void write_summary(const std::vector<SummaryRow> &rows, std::ostream &out)
{
    out << "deployment,direction,runs,sinr_p10_db,sinr_p50_db,sinr_p90_db,tput_p10_mbps,tput_p50_mbps,tput_p90_mbps,jain\n";
    for (const auto &r : rows)
        out << scenario::to_string(r.deployment) << ',' << to_string(r.direction) << ',' << r.n_runs << ',' << r.sinr_p10
            << ',' << r.sinr_p50 << ',' << r.sinr_p90 << ',' << r.tput_p10 << ',' << r.tput_p50 << ',' << r.tput_p90 << ','
            << r.jain << '\n';
}

CampaignResult run_campaign(const config::RunConfig &cfg)
{
    config::validate(cfg);
    const auto params = config::sim_params(cfg);
    const auto scenario_params = config::scenario_params(cfg);
    const auto grid = config::grid_geometry(cfg);
    const std::vector<scenario::NodeRecord> layout =
        cfg.layout.empty() ? std::vector<scenario::NodeRecord>{} : scenario::read_layout_file(cfg.layout);

    const fs::path root(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec)
        throw std::runtime_error("cannot create output directory '" + root.string() + "': " + ec.message());

    CampaignResult out;
    for (auto kind : cfg.deployments)
    {
        std::vector<sim::RunResult> runs;
        for (std::uint64_t seed : cfg.seeds)
        {
            spdlog::info("running {} seed {} ({} slots)", scenario::to_string(kind), seed, cfg.n_slots);
            const fs::path dir = root / std::string(scenario::to_string(kind)) / ("seed_" + std::to_string(seed));
            fs::create_directories(dir, ec);
            if (ec)
                throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());

            sim::Simulator simulator(scenario::build_scenario(kind, grid, scenario_params, layout), params, seed);
            std::ofstream channel_out;
            if (cfg.channel_trace)
            {
                channel_out = open_out(dir / "channel_trace.csv");
            }
            auto result = simulator.run(cfg.n_slots, cfg.channel_trace ? &channel_out : nullptr);
            write_run_outputs(result, dir, cfg.write_trace);
            out.run_dirs.push_back(dir);
            // the per-slot trace is large; summaries only need the SINR and throughput samples
            result.trace.clear();
            result.trace.shrink_to_fit();
            result.deliveries.clear();
            result.deliveries.shrink_to_fit();
            runs.push_back(std::move(result));
        }
        const auto rows = summarise_runs(runs);
        out.rows.insert(out.rows.end(), rows.begin(), rows.end());
    }

    {
        auto s = open_out(root / "summary.csv");
        write_summary(out.rows, s);
    }
    {
        auto f = open_out(root / "fairness.csv");
        f << "deployment,direction,jain\n";
        for (const auto &r : out.rows)
            f << scenario::to_string(r.deployment) << ',' << to_string(r.direction) << ',' << r.jain << '\n';
    }
    return out;
}

} // namespace densim::campaign
