#pragma once

#include "chaospde/propagator.hpp"
#include "chaospde/regularize.hpp"
#include "chaospde/vws.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace chaospde {

/// Flat `section.key = value` text configuration. Blank lines and lines
/// starting with '#' are ignored.
class Config {
public:
    static Config parse(const std::string& text, const std::string& origin = "<config>");
    static Config load(const std::filesystem::path& path);

    /// Overrides or adds a key; the key must be known.
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    /// True when any key starts with `block.`.
    bool has_block(const std::string& block) const;
    const std::map<std::string, std::string>& values() const noexcept { return values_; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;

    static const std::set<std::string>& known_keys();

private:
    std::map<std::string, std::string> values_;
};

std::vector<double> parse_double_list(const std::string& text);

enum class Command { solve, vws, consistency, negligibility, moderate, sample, section6 };

std::string to_string(Command c);
Command parse_command(const std::string& s);

/// Data choices of the worked example: f(t, x) = e^{-x^2}, g(x) = e^{-x^2/2},
/// x_0 and x_{e_k} = offset + k spacing, K noise modes.
struct Section6Preset {
    std::size_t modes = 4;
    double x0 = 0.0;
    double spacing = 0.1;
    double offset = -0.25;
    double s = 1.0;

    double location(std::size_t k) const { return offset + spacing * static_cast<double>(k); }
};

struct Section6Problem {
    SingularPotential Q;
    ProblemSpec base;  ///< F = f + g W_t, G = W_x, zero bounded potential
};

/// Throws ValidationError when K exceeds the truncation width or a location
/// leaves the window.
Section6Problem build_section6_problem(const Section6Preset& preset, const GridSpec& grid,
                                       std::shared_ptr<const TruncationSet> truncation);

/// Validated, typed view of a Config for one command.
struct RunConfig {
    Command command = Command::section6;
    Config source;
    bool from_file = false;

    GridSpec grid;
    std::size_t K = 6;
    std::size_t P = 3;
    std::size_t cap = kDefaultTruncationCap;
    OperatorSpec op;

    std::string force_kind;
    std::string initial_kind;
    std::string potential_kind;
    double potential_amplitude = 1.0;
    double potential_width = 1.0;
    double potential_chaos_amplitude = 0.5;
    Section6Preset preset;

    MollifierSpec mollifier;
    MollifierPerturbation perturbation;
    std::vector<double> eps;
    std::optional<double> p;
    unsigned m = 2;
    std::uint64_t seed = 1;
    std::size_t sample_count = 1;
    std::size_t workers = 1;
    std::size_t time_stride = 20;
    double n_min = 3.0;
    double critical_threshold = 0.05;
    std::size_t critical_modes = 40;
    std::filesystem::path out_dir = "out";

    /// Applies command defaults, reads every key, checks ranges and required blocks.
    static RunConfig from(Command command, const Config& config, bool from_file);
};

/// Executes the command and writes manifest.json, timings.json, fields/*.csv
/// and reports/*.json under out_dir. Returns 0 on success, 1 for validation
/// failures, 2 for numerical failures; the message goes to `err`.
int run(const RunConfig& config, std::ostream& log, std::ostream& err);

/// RunConfig::from followed by run, with configuration errors mapped to 1.
int execute(Command command, const Config& config, bool from_file, std::ostream& log,
            std::ostream& err);

} // namespace chaospde
