#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tempotrack/attrans.hpp"
#include "tempotrack/error.hpp"

namespace tempotrack {

// One backbone stage as declared in a config file. The loader marks the final
// two stages temporally adaptive.
struct StageSpec {
    int kernel = 3;
    int stride = 1;
    int channels = 0;
    int pool_window = 0;  // 0 = no pooling
    int pool_stride = 1;
};

struct TrackerConfig {
    std::vector<StageSpec> stages;
    int template_size = 127;
    int search_size = 287;
    int queue_len = 3;  // L
    int num_heads = 6;
    int embed_channels = 96;  // C_i
    int adjust_kernel = 3;    // same-padding conv after correlation
    int filter_kernel = 1;    // filter/fusion convs inside the encoder
    float context = 0.5f;
    std::uint64_t weight_seed = 1;
    std::uint64_t prior_seed = 7;
    bool filter_enabled = true;
    QueryChoice query_choice = QueryChoice::previous_prior;
    PriorInit prior_init = PriorInit::convolutional;

    ATTransToggles toggles() const { return {filter_enabled, query_choice, prior_init}; }

    int total_stride() const {
        int s = 1;
        for (const StageSpec& st : stages) {
            s *= st.stride;
            if (st.pool_window > 0) s *= st.pool_stride;
        }
        return s;
    }

    int backbone_out_channels() const {
        if (stages.empty()) throw InputError("config: no backbone stages");
        return stages.back().channels;
    }

    void validate() const {
        if (stages.size() < 2) throw InputError("config: need at least two backbone stages");
        for (const StageSpec& st : stages) {
            if (st.kernel < 1 || st.stride < 1 || st.channels < 1) {
                throw InputError("config: stage fields must be positive");
            }
        }
        if (queue_len < 1) throw InputError("config: queue_len must be >= 1");
        if (num_heads < 1) throw InputError("config: num_heads must be >= 1");
        if (embed_channels % num_heads != 0) {
            throw InputError("config: embed_channels must be divisible by num_heads");
        }
        if (template_size < 1 || search_size < template_size) {
            throw InputError("config: need search_size >= template_size >= 1");
        }
        if (context < 0.0f) throw InputError("config: context must be >= 0");
        if (adjust_kernel % 2 != 1 || filter_kernel != 1) {
            throw InputError("config: adjust kernel must be odd, filter kernel must be 1");
        }
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Stage syntax: "k11 s2 c32 pool" with stages separated by '|'.
inline std::vector<StageSpec> parse_stage_plan(const std::string& text) {
    std::vector<StageSpec> stages;
    std::stringstream plan(text);
    std::string part;
    while (std::getline(plan, part, '|')) {
        part = trim(part);
        if (part.empty()) continue;
        StageSpec spec;
        std::stringstream ss(part);
        std::string tok;
        bool have_channels = false;
        while (ss >> tok) {
            if (tok == "pool") {
                spec.pool_window = 3;
                spec.pool_stride = 2;
            } else if (tok.size() > 1 && tok[0] == 'k') {
                spec.kernel = std::stoi(tok.substr(1));
            } else if (tok.size() > 1 && tok[0] == 's') {
                spec.stride = std::stoi(tok.substr(1));
            } else if (tok.size() > 1 && tok[0] == 'c') {
                spec.channels = std::stoi(tok.substr(1));
                have_channels = true;
            } else {
                throw InputError("config: unknown stage token '" + tok + "'");
            }
        }
        if (!have_channels) throw InputError("config: stage missing channel count: " + part);
        stages.push_back(spec);
    }
    return stages;
}

}  // namespace detail

// Plain key=value text; '#' starts a comment.
inline TrackerConfig parse_config(std::istream& in) {
    TrackerConfig cfg;
    cfg.stages.clear();
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InputError("config: expected key=value: " + line);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));

        if (key == "stages") {
            cfg.stages = detail::parse_stage_plan(value);
        } else if (key == "template_size") {
            cfg.template_size = std::stoi(value);
        } else if (key == "search_size") {
            cfg.search_size = std::stoi(value);
        } else if (key == "queue_len") {
            cfg.queue_len = std::stoi(value);
        } else if (key == "num_heads") {
            cfg.num_heads = std::stoi(value);
        } else if (key == "embed_channels") {
            cfg.embed_channels = std::stoi(value);
        } else if (key == "adjust_kernel") {
            cfg.adjust_kernel = std::stoi(value);
        } else if (key == "filter_kernel") {
            cfg.filter_kernel = std::stoi(value);
        } else if (key == "context") {
            cfg.context = std::stof(value);
        } else if (key == "weight_seed") {
            cfg.weight_seed = std::stoull(value);
        } else if (key == "prior_seed") {
            cfg.prior_seed = std::stoull(value);
        } else if (key == "filter") {
            if (value == "on") cfg.filter_enabled = true;
            else if (value == "off") cfg.filter_enabled = false;
            else throw InputError("config: filter must be on|off");
        } else if (key == "query") {
            if (value == "previous") cfg.query_choice = QueryChoice::previous_prior;
            else if (value == "current") cfg.query_choice = QueryChoice::current_map;
            else throw InputError("config: query must be previous|current");
        } else if (key == "prior_init") {
            if (value == "conv") cfg.prior_init = PriorInit::convolutional;
            else if (value == "random") cfg.prior_init = PriorInit::random;
            else throw InputError("config: prior_init must be conv|random");
        } else {
            throw InputError("config: unknown key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

inline TrackerConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("config: cannot open " + path);
    return parse_config(in);
}

inline std::string config_text(const TrackerConfig& cfg) {
    std::ostringstream out;
    out << "stages = ";
    for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
        const StageSpec& st = cfg.stages[i];
        if (i) out << " | ";
        out << "k" << st.kernel << " s" << st.stride << " c" << st.channels;
        if (st.pool_window > 0) out << " pool";
    }
    out << "\n";
    out << "template_size = " << cfg.template_size << "\n";
    out << "search_size = " << cfg.search_size << "\n";
    out << "queue_len = " << cfg.queue_len << "\n";
    out << "num_heads = " << cfg.num_heads << "\n";
    out << "embed_channels = " << cfg.embed_channels << "\n";
    out << "adjust_kernel = " << cfg.adjust_kernel << "\n";
    out << "filter_kernel = " << cfg.filter_kernel << "\n";
    out << "context = " << cfg.context << "\n";
    out << "weight_seed = " << cfg.weight_seed << "\n";
    out << "prior_seed = " << cfg.prior_seed << "\n";
    out << "filter = " << (cfg.filter_enabled ? "on" : "off") << "\n";
    out << "query = "
        << (cfg.query_choice == QueryChoice::previous_prior ? "previous" : "current") << "\n";
    out << "prior_init = " << (cfg.prior_init == PriorInit::convolutional ? "conv" : "random")
        << "\n";
    return out.str();
}

// Full-size configuration: 127 template, 287 search, stride-8 feature grid,
// 96-channel similarity map.
inline TrackerConfig full_config() {
    TrackerConfig cfg;
    cfg.stages = {
        {11, 2, 32, 3, 2},
        {5, 1, 64, 3, 2},
        {3, 1, 96, 0, 1},
        {3, 1, 96, 0, 1},
        {3, 1, 96, 0, 1},
    };
    cfg.template_size = 127;
    cfg.search_size = 287;
    cfg.embed_channels = 96;
    cfg.validate();
    return cfg;
}

// Desk-scale configuration used by tests and benchmarks: stride 1, 12-channel
// similarity map.
inline TrackerConfig tiny_config() {
    TrackerConfig cfg;
    cfg.stages = {
        {3, 1, 8, 0, 1},
        {3, 1, 12, 0, 1},
        {3, 1, 12, 0, 1},
    };
    cfg.template_size = 16;
    cfg.search_size = 32;
    cfg.embed_channels = 12;
    cfg.validate();
    return cfg;
}

}  // namespace tempotrack
