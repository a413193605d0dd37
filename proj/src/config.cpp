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

#include "densim/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace densim::config
{

namespace
{

namespace pt = boost::property_tree;

std::string trimmed(const std::string &s) { return boost::algorithm::trim_copy(s); }

double to_double(const std::string &key, const std::string &text)
{
    const std::string s = trimmed(text);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size() || !std::isfinite(v))
        throw ConfigError(key, "expected a number, got '" + text + "'");
    return v;
}

long long to_int(const std::string &key, const std::string &text)
{
    const std::string s = trimmed(text);
    long long v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size())
        throw ConfigError(key, "expected an integer, got '" + text + "'");
    return v;
}

std::uint64_t to_count(const std::string &key, const std::string &text)
{
    const long long v = to_int(key, text);
    if (v < 0)
        throw ConfigError(key, "must be non-negative");
    return static_cast<std::uint64_t>(v);
}

bool to_bool(const std::string &key, const std::string &text)
{
    const std::string s = boost::algorithm::to_lower_copy(trimmed(text));
    if (s == "true" || s == "1" || s == "yes" || s == "on")
        return true;
    if (s == "false" || s == "0" || s == "no" || s == "off")
        return false;
    throw ConfigError(key, "expected a boolean, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string &text)
{
    std::vector<std::string> parts;
    boost::algorithm::split(parts, text, boost::algorithm::is_any_of(","));
    std::vector<std::string> out;
    for (auto &p : parts)
        if (auto t = trimmed(p); !t.empty())
            out.push_back(t);
    return out;
}

std::vector<double> to_doubles(const std::string &key, const std::string &text)
{
    std::vector<double> out;
    for (const auto &p : split_list(text))
        out.push_back(to_double(key, p));
    return out;
}

std::string format(double v)
{
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

struct Targets
{
    sim::SimParams &sim;
    scenario::ScenarioParams &scenario;
    scenario::GridGeometry &grid;
};

using Setter = std::function<void(Targets &, const std::string &key, const std::string &value)>;

Setter number(double sim::SimParams::*field)
{
    return [field](Targets &t, const std::string &k, const std::string &v) { t.sim.*field = to_double(k, v); };
}
Setter number(double scenario::ScenarioParams::*field)
{
    return [field](Targets &t, const std::string &k, const std::string &v) { t.scenario.*field = to_double(k, v); };
}
Setter number(double scenario::GridGeometry::*field)
{
    return [field](Targets &t, const std::string &k, const std::string &v) { t.grid.*field = to_double(k, v); };
}

const std::vector<std::pair<std::string, Setter>> &override_table()
{
    static const std::vector<std::pair<std::string, Setter>> table = {
        {"grid.block_size", number(&scenario::GridGeometry::block_size)},
        {"grid.sidewalk_width", number(&scenario::GridGeometry::sidewalk_width)},
        {"grid.street_width", number(&scenario::GridGeometry::street_width)},
        {"grid.n_blocks_traversed",
         [](Targets &t, const std::string &k, const std::string &v) { t.grid.n_blocks_traversed = static_cast<int>(to_int(k, v)); }},
        {"power.gnb_dbm", number(&scenario::ScenarioParams::gnb_power_dbm)},
        {"power.stationary_dbm", number(&scenario::ScenarioParams::stationary_power_dbm)},
        {"power.uav_dbm", number(&scenario::ScenarioParams::uav_power_dbm)},
        {"power.ue_dbm", number(&scenario::ScenarioParams::ue_power_dbm)},
        {"mobility.ue_speed_kmh", number(&scenario::ScenarioParams::ue_speed_kmh)},
        {"mobility.uav_speed_kmh", number(&scenario::ScenarioParams::uav_speed_kmh)},
        {"antenna.element_gain_dbi", number(&scenario::ScenarioParams::element_gain_dbi)},
        {"antenna.ris_downtilt_deg", number(&scenario::ScenarioParams::ris_downtilt_deg)},
        {"antenna.codebook_az",
         [](Targets &t, const std::string &k, const std::string &v) { t.sim.codebook_az = to_count(k, v); }},
        {"antenna.codebook_el",
         [](Targets &t, const std::string &k, const std::string &v) { t.sim.codebook_el = to_count(k, v); }},
        {"noise.density_dbm_hz", number(&sim::SimParams::noise_density_dbm_hz)},
        {"noise.figure_db", number(&sim::SimParams::noise_figure_db)},
        {"channel.shadowing",
         [](Targets &t, const std::string &k, const std::string &v) { t.sim.shadowing = to_bool(k, v); }},
        {"channel.k_factor_db",
         [](Targets &t, const std::string &k, const std::string &v) { t.sim.fading.k_factor_db = to_double(k, v); }},
        {"channel.temporal_correlation",
         [](Targets &t, const std::string &k, const std::string &v)
         { t.sim.fading.temporal_correlation = to_double(k, v); }},
        {"channel.n_nlos_rays",
         [](Targets &t, const std::string &k, const std::string &v)
         { t.sim.fading.n_nlos_rays = static_cast<int>(to_int(k, v)); }},
        {"channel.pure_los",
         [](Targets &t, const std::string &k, const std::string &v) { t.sim.fading.pure_los = to_bool(k, v); }},
        {"channel.geometry_epoch_slots",
         [](Targets &t, const std::string &k, const std::string &v)
         { t.sim.geometry_epoch_slots = static_cast<int>(to_int(k, v)); }},
        {"ncr.output_cap",
         [](Targets &t, const std::string &k, const std::string &v) { t.sim.ncr_output_cap = to_bool(k, v); }},
        {"ris.phase_bits",
         [](Targets &t, const std::string &k, const std::string &v)
         {
             if (boost::algorithm::to_lower_copy(trimmed(v)) == "continuous")
                 t.sim.ris_phase_bits.reset();
             else
                 t.sim.ris_phase_bits = static_cast<int>(to_int(k, v));
         }},
        {"association.floor_dbm", number(&sim::SimParams::association_floor_dbm)},
        {"association.period_slots",
         [](Targets &t, const std::string &k, const std::string &v)
         { t.sim.reassociation_slots = static_cast<int>(to_int(k, v)); }},
        {"mac.overhead", [](Targets &t, const std::string &k, const std::string &v) { t.sim.mac.overhead = to_double(k, v); }},
        {"mac.bler_slope_per_db",
         [](Targets &t, const std::string &k, const std::string &v) { t.sim.mac.bler.slope_per_db = to_double(k, v); }},
        {"mac.outer_loop_step_down_db",
         [](Targets &t, const std::string &k, const std::string &v)
         { t.sim.mac.outer_loop.step_down_db = to_double(k, v); }},
        {"mac.outer_loop_step_up_db",
         [](Targets &t, const std::string &k, const std::string &v)
         { t.sim.mac.outer_loop.step_up_db = to_double(k, v); }},
        {"mac.outer_loop_min_db",
         [](Targets &t, const std::string &k, const std::string &v)
         { t.sim.mac.outer_loop.min_offset_db = to_double(k, v); }},
        {"mac.outer_loop_max_db",
         [](Targets &t, const std::string &k, const std::string &v)
         { t.sim.mac.outer_loop.max_offset_db = to_double(k, v); }},
        {"mac.mcs_thresholds_db",
         [](Targets &t, const std::string &k, const std::string &v)
         {
             const auto thr = to_doubles(k, v);
             auto entries = t.sim.mac.table.entries();
             if (thr.size() != entries.size())
                 throw ConfigError(k, "expected " + std::to_string(entries.size()) + " thresholds");
             for (std::size_t i = 0; i < thr.size(); ++i)
                 entries[i].threshold_db = thr[i];
             try
             {
                 t.sim.mac.table = mac::McsTable(std::move(entries));
             }
             catch (const std::invalid_argument &e)
             {
                 throw ConfigError(k, e.what());
             }
         }},
        {"metrics.throughput_window_s", number(&sim::SimParams::throughput_window_s)},
    };
    return table;
}

void apply_overrides(const RunConfig &cfg, Targets t)
{
    const auto &table = override_table();
    for (const auto &[key, value] : cfg.overrides)
    {
        auto it = std::find_if(table.begin(), table.end(), [&](const auto &e) { return e.first == key; });
        if (it == table.end())
            throw ConfigError("overrides." + key, "unknown override");
        it->second(t, "overrides." + key, value);
    }
}

std::vector<std::uint64_t> parse_seeds(const std::string &key, const std::string &text)
{
    std::vector<std::uint64_t> out;
    for (const auto &tok : split_list(text))
    {
        const auto dash = tok.find('-', 1);
        if (dash == std::string::npos)
        {
            out.push_back(to_count(key, tok));
            continue;
        }
        const std::uint64_t lo = to_count(key, tok.substr(0, dash)), hi = to_count(key, tok.substr(dash + 1));
        if (hi < lo || hi - lo > 100000)
            throw ConfigError(key, "bad seed range '" + tok + "'");
        for (std::uint64_t s = lo; s <= hi; ++s)
            out.push_back(s);
    }
    return out;
}

} // namespace

std::vector<std::string> override_keys()
{
    std::vector<std::string> out;
    for (const auto &[k, s] : override_table())
        out.push_back(k);
    return out;
}

RunConfig parse_config(std::istream &in)
{
    pt::ptree tree;
    try
    {
        pt::read_ini(in, tree);
    }
    catch (const pt::ini_parser_error &e)
    {
        throw ConfigError("file", e.message() + " (line " + std::to_string(e.line()) + ")");
    }

    RunConfig cfg;
    for (const auto &[section, body] : tree)
    {
        if (body.empty() && !body.data().empty())
            throw ConfigError(section, "entries must belong to a section");
        for (const auto &[name, node] : body)
        {
            const std::string key = section + "." + name;
            const std::string v = trimmed(node.data());
            if (section == "run")
            {
                if (name == "deployments")
                {
                    cfg.deployments.clear();
                    for (const auto &d : split_list(v))
                    {
                        try
                        {
                            cfg.deployments.push_back(scenario::parse_deployment(d));
                        }
                        catch (const std::invalid_argument &e)
                        {
                            throw ConfigError(key, e.what());
                        }
                    }
                }
                else if (name == "n_slots")
                    cfg.n_slots = to_count(key, v);
                else if (name == "seeds")
                    cfg.seeds = parse_seeds(key, v);
                else if (name == "output_dir")
                    cfg.output_dir = v;
                else if (name == "layout")
                    cfg.layout = v;
                else if (name == "trace")
                    cfg.write_trace = to_bool(key, v);
                else if (name == "channel_trace")
                    cfg.channel_trace = to_bool(key, v);
                else
                    throw ConfigError(key, "unknown key");
            }
            else if (section == "radio")
            {
                if (name == "carrier_ghz")
                    cfg.carrier_ghz = to_double(key, v);
                else if (name == "bandwidth_mhz")
                    cfg.bandwidth_mhz = to_double(key, v);
                else if (name == "scs_khz")
                    cfg.scs_khz = to_double(key, v);
                else if (name == "n_prbs")
                    cfg.n_prbs = static_cast<int>(to_int(key, v));
                else if (name == "ncr_gain_db")
                    cfg.ncr_gain_db = to_double(key, v);
                else
                    throw ConfigError(key, "unknown key");
            }
            else if (section == "overrides")
                cfg.overrides[name] = v;
            else
                throw ConfigError(section, "unknown section");
        }
    }
    validate(cfg);
    return cfg;
}

RunConfig load_config(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("file", "cannot open '" + path + "'");
    return parse_config(in);
}

void validate(const RunConfig &cfg)
{
    if (cfg.deployments.empty())
        throw ConfigError("run.deployments", "at least one deployment is required");
    if (cfg.n_slots < 1)
        throw ConfigError("run.n_slots", "must be >= 1");
    if (cfg.seeds.empty())
        throw ConfigError("run.seeds", "at least one seed is required");
    if (cfg.output_dir.empty())
        throw ConfigError("run.output_dir", "must not be empty");
    if (!(cfg.carrier_ghz >= 0.5 && cfg.carrier_ghz <= 100.0))
        throw ConfigError("radio.carrier_ghz", "must lie in [0.5, 100] GHz");
    if (!(cfg.bandwidth_mhz > 0.0))
        throw ConfigError("radio.bandwidth_mhz", "must be positive");
    if (!(cfg.scs_khz > 0.0))
        throw ConfigError("radio.scs_khz", "must be positive");
    if (cfg.n_prbs < 1)
        throw ConfigError("radio.n_prbs", "must be >= 1");
    if (cfg.n_prbs * 12 * cfg.scs_khz * 1e3 > cfg.bandwidth_mhz * 1e6)
        throw ConfigError("radio.n_prbs", "n_prbs * 12 * scs exceeds the bandwidth");
    if (!std::isfinite(cfg.ncr_gain_db) || cfg.ncr_gain_db < 0.0)
        throw ConfigError("radio.ncr_gain_db", "must be a non-negative number");

    sim::SimParams sp;
    scenario::ScenarioParams scp;
    scenario::GridGeometry grid;
    apply_overrides(cfg, {sp, scp, grid});
    try
    {
        grid.validate();
    }
    catch (const std::invalid_argument &e)
    {
        throw ConfigError("overrides.grid", e.what());
    }
    auto require = [](bool ok, const char *key, const char *msg)
    {
        if (!ok)
            throw ConfigError(std::string("overrides.") + key, msg);
    };
    require(sp.geometry_epoch_slots >= 1, "channel.geometry_epoch_slots", "must be >= 1");
    require(sp.reassociation_slots >= 0, "association.period_slots", "must be >= 0");
    require(sp.fading.n_nlos_rays >= 0, "channel.n_nlos_rays", "must be >= 0");
    require(sp.fading.temporal_correlation >= 0.0 && sp.fading.temporal_correlation <= 1.0,
            "channel.temporal_correlation", "must lie in [0, 1]");
    require(!sp.ris_phase_bits || (*sp.ris_phase_bits >= 1 && *sp.ris_phase_bits <= 16), "ris.phase_bits",
            "must be 'continuous' or in [1, 16]");
    require(sp.codebook_az >= 1 && sp.codebook_el >= 1, "antenna.codebook_az", "codebook dimensions must be >= 1");
    require(sp.mac.overhead > 0.0 && sp.mac.overhead <= 1.0, "mac.overhead", "must lie in (0, 1]");
    require(sp.mac.bler.slope_per_db > 0.0, "mac.bler_slope_per_db", "must be positive");
    require(sp.mac.outer_loop.step_down_db >= 0.0, "mac.outer_loop_step_down_db", "must be >= 0");
    require(sp.mac.outer_loop.step_up_db >= 0.0, "mac.outer_loop_step_up_db", "must be >= 0");
    require(sp.mac.outer_loop.min_offset_db <= sp.mac.outer_loop.max_offset_db, "mac.outer_loop_min_db",
            "must not exceed mac.outer_loop_max_db");
    require(sp.throughput_window_s > 0.0, "metrics.throughput_window_s", "must be positive");
    require(scp.ue_speed_kmh >= 0.0, "mobility.ue_speed_kmh", "must be >= 0");
    require(scp.uav_speed_kmh >= 0.0, "mobility.uav_speed_kmh", "must be >= 0");
}

std::string serialize(const RunConfig &cfg)
{
    std::ostringstream out;
    out << "[run]\n";
    out << "deployments = ";
    for (std::size_t i = 0; i < cfg.deployments.size(); ++i)
        out << (i ? ", " : "") << scenario::to_string(cfg.deployments[i]);
    out << "\nn_slots = " << cfg.n_slots << "\nseeds = ";
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
        out << (i ? ", " : "") << cfg.seeds[i];
    out << "\noutput_dir = " << cfg.output_dir << '\n';
    if (!cfg.layout.empty())
        out << "layout = " << cfg.layout << '\n';
    out << "trace = " << (cfg.write_trace ? "true" : "false") << '\n';
    out << "channel_trace = " << (cfg.channel_trace ? "true" : "false") << '\n';
    out << "\n[radio]\n";
    out << "carrier_ghz = " << format(cfg.carrier_ghz) << '\n';
    out << "bandwidth_mhz = " << format(cfg.bandwidth_mhz) << '\n';
    out << "scs_khz = " << format(cfg.scs_khz) << '\n';
    out << "n_prbs = " << cfg.n_prbs << '\n';
    out << "ncr_gain_db = " << format(cfg.ncr_gain_db) << '\n';
    if (!cfg.overrides.empty())
    {
        out << "\n[overrides]\n";
        for (const auto &[k, v] : cfg.overrides)
            out << k << " = " << v << '\n';
    }
    return out.str();
}

scenario::GridGeometry grid_geometry(const RunConfig &cfg)
{
    sim::SimParams sp;
    scenario::ScenarioParams scp;
    scenario::GridGeometry grid;
    apply_overrides(cfg, {sp, scp, grid});
    return grid;
}

scenario::ScenarioParams scenario_params(const RunConfig &cfg)
{
    sim::SimParams sp;
    scenario::ScenarioParams scp;
    scenario::GridGeometry grid;
    apply_overrides(cfg, {sp, scp, grid});
    return scp;
}

sim::SimParams sim_params(const RunConfig &cfg)
{
    sim::SimParams sp;
    sp.fc_ghz = cfg.carrier_ghz;
    sp.bandwidth_hz = cfg.bandwidth_mhz * 1e6;
    sp.scs_hz = cfg.scs_khz * 1e3;
    sp.ncr_gain_db = cfg.ncr_gain_db;
    sp.mac.n_prbs = cfg.n_prbs;
    // numerology: 1 ms at 15 kHz, halved per doubling of the spacing
    sp.mac.pattern.slot_duration_s = 1e-3 * 15e3 / sp.scs_hz;
    scenario::ScenarioParams scp;
    scenario::GridGeometry grid;
    apply_overrides(cfg, {sp, scp, grid});
    return sp;
}

} // namespace densim::config
