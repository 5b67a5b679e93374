#pragma once
// Experiment runner: config parsing, statistics, tables and the four
// subcommands behind the fieldslab CLI.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fieldslab/testfn.hpp"

namespace fieldslab {

inline constexpr const char* kVersion = "0.1.0";

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FunctionSpec {
    std::string name;
    nlohmann::json spec;  // list of factor objects
    ProductTestFunction fn;
};

FactorPtr parse_factor(const nlohmann::json& j, int d);
FunctionSpec parse_function(const nlohmann::json& j, int d, const std::string& fallback_name);

struct ExperimentConfig {
    std::string command;
    std::vector<int> sigmas;
    std::vector<int> alphas;
    int d = 1;
    std::vector<int> Ns;
    double bond_rate = 0.5;
    double theta = 0.5;
    nlohmann::json profile;  // factor spec; null means constant theta
    std::vector<FunctionSpec> functions;
    std::vector<double> times;
    std::uint64_t samples = 0;
    std::uint64_t seed = 1;
    int threads = 0;

    // exact-check
    std::vector<std::string> identities;
    std::vector<int> ks;
    std::vector<double> thetas;
    int max_particles = 3;
    std::vector<int> product_Ns;
    std::vector<int> expectation_Ns;
    int configs_per_point = 50;
    double tolerance = 1e-10;
    double rate_perturbation = 0.0;

    // fluct-sweep
    int batches = 20;
    double window = 0.1;
    int gamma_points = 200;

    // dual-check
    std::vector<std::vector<int>> tuples;
    int exact_N_max = 4;

    nlohmann::json resolved() const;
};

// Fills command defaults, then validates. Unknown keys are rejected.
ExperimentConfig parse_config(const nlohmann::json& j, const std::string& command);
ExperimentConfig load_config(const std::filesystem::path& path, const std::string& command);
std::uint64_t fnv1a64(const std::string& s);
std::uint64_t config_hash(const ExperimentConfig& cfg);

// ---- statistics

struct SampleStats {
    std::uint64_t n = 0;
    double mean = 0.0;
    double std_error = 0.0;
    double variance = 0.0;  // unbiased
    double variance_se = 0.0;
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
};

// Fixed summation order, so the result depends only on the sample order.
SampleStats describe(const std::vector<double>& xs);
double sample_covariance(const std::vector<double>& a, const std::vector<double>& b, double* se = nullptr);
// Jarque-Bera p-value (chi-square with two degrees of freedom).
double jarque_bera_pvalue(const SampleStats& s);
// Means of `batches` contiguous blocks.
std::vector<double> batch_means(const std::vector<double>& series, int batches);

struct EstimateRecord {
    std::string name;
    double estimate = 0.0;
    double std_error = 0.0;
    std::uint64_t samples = 0;
    std::optional<double> target;
    double z() const;
};

EstimateRecord make_record(std::string name, const std::vector<double>& xs, std::optional<double> target = {});

// ---- tables

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    void add_row(std::vector<Cell> row);
};

std::string format_double(double v);  // 17 significant digits
std::string to_csv(const Table& t);
nlohmann::json to_json(const Table& t);
Table table_from_json(const nlohmann::json& j);

struct Meta {
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    std::string command;
    nlohmann::json config;
};

enum class Format { csv, json };
Format parse_format(const std::string& s);
// Writes <dir>/<table>.<ext> per table plus <dir>/meta.json.
void emit(const std::vector<Table>& tables, const Meta& meta, const std::filesystem::path& dir, Format fmt);

// ---- subcommands

struct Report {
    std::vector<Table> tables;
    bool ok = true;
    std::vector<std::string> messages;
};

Report cmd_exact_check(const ExperimentConfig& cfg);
Report cmd_hydro_sweep(const ExperimentConfig& cfg);
Report cmd_fluct_sweep(const ExperimentConfig& cfg);
Report cmd_dual_check(const ExperimentConfig& cfg);
Report run_command(const ExperimentConfig& cfg);

}  // namespace fieldslab
