// config.hpp — run configuration: flat key = value files, overrides, validation
#pragma once

#include <charconv>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "core.hpp"

namespace lmg {

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::size_t line, std::size_t col, const std::string& what)
        : std::runtime_error("config:" + std::to_string(line) + ":" + std::to_string(col) +
                             ": " + what),
          line_no(line), col_no(col) {}
    std::size_t line_no;
    std::size_t col_no;
};

// Everything a run can be told.  Rates carry an _over_h suffix in the file (units
// of the field), times likewise (units of 1/h), energies are per spin in units of
// h.  Optional fields resolve from the data when left unset.
struct RunConfig {
    ModelParams params;

    // spectrum and level density
    std::optional<double> bin_width; // unset: span / (N/5) bins
    std::optional<double> eta;       // unset: 10 mean level spacings
    double energy_min{-0.6};
    double energy_max{0.1};
    int energy_count{141};

    // time evolution
    double dt{0.005};
    double t_max{1000.0};
    std::optional<SpinState> initial; // unset: nudged off the broken fixed point

    // delay and gain grids
    double tau_min{0.1};
    double tau_max{0.6};
    int tau_count{26};
    double lambda_min{0.5};
    double lambda_max{2.0};
    int lambda_count{16};
    int z_max{10};

    // window averaging
    double settle{500.0};
    double observe{300.0};
    double delta_t{20.0};
    double stride{10.0};
    std::string esqpt_source{"feedback_sweep"};

    std::string out_dir{"."};
    unsigned long long seed{0};
    int threads{0}; // 0: all hardware threads

    std::vector<double> tau_grid() const { return linspace(tau_min, tau_max, tau_count); }
    std::vector<double> lambda_grid() const {
        return linspace(lambda_min, lambda_max, lambda_count);
    }
    std::vector<double> energy_grid() const {
        return linspace(energy_min, energy_max, energy_count);
    }

    static std::vector<double> linspace(double lo, double hi, int n) {
        std::vector<double> v(static_cast<std::size_t>(n));
        if (n == 1) {
            v[0] = lo;
            return v;
        }
        const double step = (hi - lo) / (n - 1);
        for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + i * step;
        return v;
    }

    void validate() const {
        params.validate();
        if (bin_width && !(*bin_width > 0.0))
            throw std::invalid_argument("RunConfig: bin_width must be > 0");
        if (eta && !(*eta >= 0.0)) throw std::invalid_argument("RunConfig: eta must be >= 0");
        if (!(dt > 0.0)) throw std::invalid_argument("RunConfig: dt_over_h must be > 0");
        if (!(t_max > 0.0)) throw std::invalid_argument("RunConfig: t_max_over_h must be > 0");
        check_grid("energy", energy_min, energy_max, energy_count);
        check_grid("tau", tau_min, tau_max, tau_count);
        check_grid("lambda", lambda_min, lambda_max, lambda_count);
        if (z_max < 0) throw std::invalid_argument("RunConfig: z_max must be >= 0");
        if (!(settle >= 0.0)) throw std::invalid_argument("RunConfig: settle_over_h must be >= 0");
        if (!(observe > 0.0)) throw std::invalid_argument("RunConfig: observe_over_h must be > 0");
        if (!(delta_t > 0.0)) throw std::invalid_argument("RunConfig: delta_t_over_h must be > 0");
        if (!(stride > 0.0)) throw std::invalid_argument("RunConfig: stride_over_h must be > 0");
        if (threads < 0) throw std::invalid_argument("RunConfig: threads must be >= 0");
        if (esqpt_source != "feedback_sweep" && esqpt_source != "closed_orbit" &&
            esqpt_source != "chaotic_window")
            throw std::invalid_argument(
                "RunConfig: esqpt_source must be feedback_sweep, closed_orbit or chaotic_window");
        if (initial && !on_sphere(*initial))
            throw std::invalid_argument("RunConfig: initial state must lie on the |J| = 1/2 sphere");
    }

private:
    static void check_grid(const std::string& name, double lo, double hi, int n) {
        if (n < 1) throw std::invalid_argument("RunConfig: " + name + "_count must be >= 1");
        if (n > 1 && !(hi > lo))
            throw std::invalid_argument("RunConfig: " + name + "_max must exceed " + name + "_min");
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

// One mutable binding per key keeps parse, override and round-trip in lockstep.
struct KeyBinding {
    enum class Type { real, integer, unsigned_integer, text } type;
    void* target;
};

struct KeyTable {
    explicit KeyTable(RunConfig& c) {
        using T = KeyBinding::Type;
        bind("gamma_over_h", T::real, &c.params.gamma);
        bind("gamma_y_over_h", T::real, &c.params.gamma_y);
        bind("kappa_over_h", T::real, &c.params.kappa);
        bind("lambda_over_h", T::real, &c.params.lambda);
        bind("tau_over_h", T::real, &c.params.tau);
        bind("n_spins", T::integer, &c.params.n_spins);
        bind("energy_min", T::real, &c.energy_min);
        bind("energy_max", T::real, &c.energy_max);
        bind("energy_count", T::integer, &c.energy_count);
        bind("dt_over_h", T::real, &c.dt);
        bind("t_max_over_h", T::real, &c.t_max);
        bind("tau_min_over_h", T::real, &c.tau_min);
        bind("tau_max_over_h", T::real, &c.tau_max);
        bind("tau_count", T::integer, &c.tau_count);
        bind("lambda_min_over_h", T::real, &c.lambda_min);
        bind("lambda_max_over_h", T::real, &c.lambda_max);
        bind("lambda_count", T::integer, &c.lambda_count);
        bind("z_max", T::integer, &c.z_max);
        bind("settle_over_h", T::real, &c.settle);
        bind("observe_over_h", T::real, &c.observe);
        bind("delta_t_over_h", T::real, &c.delta_t);
        bind("stride_over_h", T::real, &c.stride);
        bind("esqpt_source", T::text, &c.esqpt_source);
        bind("out_dir", T::text, &c.out_dir);
        bind("seed", T::unsigned_integer, &c.seed);
        bind("threads", T::integer, &c.threads);
        config = &c;
        initial_was_set = c.initial.has_value();
    }

    void bind(const std::string& key, KeyBinding::Type t, void* target) {
        table[key] = {t, target};
    }

    // Optional and grouped fields need dedicated handling.
    void assign(const std::string& key, std::string_view value, std::size_t line,
                std::size_t col) {
        if (key == "bin_width") {
            config->bin_width = parse_real(value, line, col);
            return;
        }
        if (key == "eta") {
            config->eta = parse_real(value, line, col);
            return;
        }
        if (key == "initial_jx" || key == "initial_jy" || key == "initial_jz") {
            if (!config->initial) config->initial = SpinState{0.0, 0.0, 0.0};
            const double v = parse_real(value, line, col);
            if (key == "initial_jx") config->initial->jx = v;
            if (key == "initial_jy") config->initial->jy = v;
            if (key == "initial_jz") config->initial->jz = v;
            initial_seen.insert(key);
            return;
        }
        const auto it = table.find(key);
        if (it == table.end()) throw ConfigError(line, col, "unknown key '" + key + "'");
        switch (it->second.type) {
        case KeyBinding::Type::real:
            *static_cast<double*>(it->second.target) = parse_real(value, line, col);
            break;
        case KeyBinding::Type::integer:
            *static_cast<int*>(it->second.target) = parse_int(value, line, col);
            break;
        case KeyBinding::Type::unsigned_integer:
            *static_cast<unsigned long long*>(it->second.target) = parse_ull(value, line, col);
            break;
        case KeyBinding::Type::text:
            *static_cast<std::string*>(it->second.target) = std::string(value);
            break;
        }
    }

    void finish(std::size_t line) const {
        if (!initial_was_set && !initial_seen.empty() && initial_seen.size() != 3)
            throw ConfigError(line, 1,
                              "initial_jx, initial_jy, initial_jz must be given together");
    }

    static double parse_real(std::string_view v, std::size_t line, std::size_t col) {
        double out{};
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || ptr != v.data() + v.size())
            throw ConfigError(line, col, "expected a real number, got '" + std::string(v) + "'");
        return out;
    }

    static int parse_int(std::string_view v, std::size_t line, std::size_t col) {
        int out{};
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || ptr != v.data() + v.size())
            throw ConfigError(line, col, "expected an integer, got '" + std::string(v) + "'");
        return out;
    }

    static unsigned long long parse_ull(std::string_view v, std::size_t line, std::size_t col) {
        unsigned long long out{};
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || ptr != v.data() + v.size())
            throw ConfigError(line, col,
                              "expected a non-negative integer, got '" + std::string(v) + "'");
        return out;
    }

    RunConfig* config{nullptr};
    std::map<std::string, KeyBinding> table;
    std::set<std::string> initial_seen;
    bool initial_was_set{false};
};

inline const std::set<std::string>& known_sections() {
    static const std::set<std::string> s{"model", "spectrum", "evolve", "stability", "signals",
                                         "output"};
    return s;
}

} // namespace detail

// Parse a config text.  Lines are `key = value`, blank, full-line comments
// starting with '#', or decorative `[section]` headers.  Unknown keys, unknown
// sections and repeated keys are hard errors; silence would hide typos.
inline RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    detail::KeyTable keys(cfg);
    std::set<std::string> seen;
    std::size_t line_no = 0;

    while (!text.empty() || line_no == 0) {
        const auto nl = text.find('\n');
        std::string_view raw = text.substr(0, nl);
        text = (nl == std::string_view::npos) ? std::string_view{} : text.substr(nl + 1);
        ++line_no;

        const std::string_view line = detail::trim(raw);
        if (line.empty() || line.front() == '#') continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(line_no, 1, "unterminated section header");
            const std::string section(detail::trim(line.substr(1, line.size() - 2)));
            if (!detail::known_sections().count(section))
                throw ConfigError(line_no, 1, "unknown section '" + section + "'");
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(line_no, 1, "expected 'key = value'");
        const std::string key(detail::trim(line.substr(0, eq)));
        const std::string_view value = detail::trim(line.substr(eq + 1));
        const std::size_t col = raw.find_first_not_of(" \t") + 1;
        if (key.empty()) throw ConfigError(line_no, col, "empty key");
        if (!seen.insert(key).second)
            throw ConfigError(line_no, col, "key '" + key + "' set twice");
        keys.assign(key, value, line_no, col);
    }
    keys.finish(line_no);
    cfg.validate();
    return cfg;
}

// Apply `key=value` overrides on top of a parsed config (CLI flags), then
// re-validate.  All overrides share one session so a grouped field like the
// initial state can arrive across several flags.
inline void apply_overrides(RunConfig& cfg, const std::vector<std::string>& specs) {
    detail::KeyTable keys(cfg);
    for (const std::string& spec : specs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw ConfigError(0, 1, "override '" + spec + "' must look like key=value");
        const std::string key(detail::trim(std::string_view(spec).substr(0, eq)));
        keys.assign(key, detail::trim(std::string_view(spec).substr(eq + 1)), 0, 1);
    }
    keys.finish(0);
    cfg.validate();
}

} // namespace lmg
