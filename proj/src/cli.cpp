#include "msd/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "msd/complexity.hpp"
#include "msd/measure_spec.hpp"
#include "msd/transport.hpp"
#include "msd/verify.hpp"

namespace msd {

namespace {

using json = nlohmann::ordered_json;

struct Options {
    std::string measure;
    std::string mu;
    std::string nu;
    std::string snr;
    std::string snr_grid = "0.1:5:0.1";
    std::string t_grid = "0.05:3:0.05";
    std::string delta_grid = "0.002:1:0.002";
    std::string u_grid;
    std::string samples = "1000000";
    std::string particles = "10000";
    std::string steps = "100";
    std::string eta = "0.01";
    std::string beta = "1";
    std::string M_list = "1,2,inf";
    std::string seed = "0";
    std::string out;
    std::string format = "csv";
    std::string suite = "quick";
    std::string criteria;
    bool bands = false;
    bool keep_diffused = false;
};

double parse_double(const std::string& flag, std::string_view text) {
    std::string_view body = text;
    if (!body.empty() && body.front() == '+') body.remove_prefix(1);
    if (body == "inf" || body == "Inf" || body == "INF") return text.front() == '-' ? -INFINITY : INFINITY;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
    if (body.empty() || ec != std::errc() || ptr != body.data() + body.size()) {
        throw std::invalid_argument(flag + ": malformed number '" + std::string(text) + "'");
    }
    return value;
}

double parse_finite(const std::string& flag, std::string_view text) {
    const double value = parse_double(flag, text);
    if (!std::isfinite(value)) throw std::invalid_argument(flag + ": value must be finite");
    return value;
}

Index parse_count(const std::string& flag, std::string_view text) {
    const double value = parse_finite(flag, text);
    if (value < 1.0 || value != std::floor(value) || value > 1e12) {
        throw std::invalid_argument(flag + ": expected a positive integer, got '" + std::string(text) + "'");
    }
    return static_cast<Index>(value);
}

std::uint64_t parse_seed(std::string_view text) {
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::invalid_argument("--seed: expected a non-negative integer, got '" + std::string(text) + "'");
    }
    return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    size_t start = 0;
    while (true) {
        const size_t end = text.find(sep, start);
        parts.push_back(text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return parts;
}

Eigen::ArrayXd parse_grid(const std::string& flag, const std::string& text) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw std::invalid_argument(flag + ": expected start:stop:step, got '" + text + "'");
    return arithmetic_grid(parse_finite(flag, parts[0]), parse_finite(flag, parts[1]), parse_finite(flag, parts[2]));
}

std::vector<double> parse_list(const std::string& flag, const std::string& text) {
    std::vector<double> values;
    for (auto part : split(text, ',')) values.push_back(parse_double(flag, part));
    return values;
}

std::string num(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

// JSON has no infinities; they are written as the strings "inf" / "-inf".
json json_num(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    return value;
}

class Output {
public:
    Output(const Options& opt, std::ostream& out) : opt_(opt), out_(out) {}

    void write(const std::string& path, const std::string& text, size_t rows) {
        if (path.empty() || path == "-") {
            out_ << text;
            return;
        }
        std::ofstream file(path, std::ios::binary);
        if (!file) throw std::runtime_error("cannot open output file '" + path + "'");
        file << text;
        file.close();
        if (!file) throw std::runtime_error("failed writing output file '" + path + "'");
        out_ << "wrote " << path << " (" << rows << " rows)\n";
    }

    bool json() const { return opt_.format == "json"; }

private:
    const Options& opt_;
    std::ostream& out_;
};

std::string metadata(std::uint64_t seed, Index n, const std::string& spec,
                     const std::vector<std::pair<std::string, std::string>>& extra = {}) {
    std::string line = "# seed=" + std::to_string(seed) + ", n=" + std::to_string(n) + ", spec=" + spec;
    for (const auto& [key, value] : extra) line += ", " + key + "=" + value;
    return line + "\n";
}

std::string require(const std::string& value, const char* flag) {
    if (value.empty()) throw std::invalid_argument(std::string(flag) + " is required");
    return value;
}

Eigen::ArrayXd delta_grid_of(const Options& opt) { return parse_grid("--delta-grid", opt.delta_grid); }

void run_survival(const Options& opt, Output& output) {
    const std::string spec = require(opt.measure, "--measure");
    const Measure m = parse_measure(spec);
    const double r = parse_finite("--snr", require(opt.snr, "--snr"));
    const Index n = parse_count("--samples", opt.samples);
    const std::uint64_t seed = parse_seed(opt.seed);
    const Eigen::ArrayXd grid = opt.u_grid.empty() ? Eigen::ArrayXd() : parse_grid("--u-grid", opt.u_grid);
    const auto curve = survival_curve(m, r, n, seed, grid);
    const auto band = survival_band(curve);

    std::string text;
    if (output.json()) {
        json doc;
        doc["config"] = {{"seed", seed}, {"n", n}, {"spec", spec}, {"r", r}, {"max_localization", curve.max_localization}};
        doc["rows"] = json::array();
        for (Index i = 0; i < curve.u_grid.size(); ++i) {
            json row = {{"u", curve.u_grid(i)}, {"s", curve.s_values(i)}};
            if (opt.bands) {
                row["s_lo"] = band.lower(i);
                row["s_hi"] = band.upper(i);
            }
            doc["rows"].push_back(row);
        }
        text = doc.dump(2) + "\n";
    } else {
        std::ostringstream csv;
        csv << metadata(seed, n, spec, {{"r", num(r)}, {"max_localization", num(curve.max_localization)}});
        csv << (opt.bands ? "u,s,s_lo,s_hi\n" : "u,s\n");
        for (Index i = 0; i < curve.u_grid.size(); ++i) {
            csv << num(curve.u_grid(i)) << ',' << num(curve.s_values(i));
            if (opt.bands) csv << ',' << num(band.lower(i)) << ',' << num(band.upper(i));
            csv << '\n';
        }
        text = csv.str();
    }
    output.write(opt.out, text, static_cast<size_t>(curve.u_grid.size()));
}

void run_complexity(const Options& opt, Output& output) {
    const std::string spec = require(opt.measure, "--measure");
    const Measure m = parse_measure(spec);
    const Index n = parse_count("--samples", opt.samples);
    const std::uint64_t seed = parse_seed(opt.seed);
    const Eigen::ArrayXd snrs = opt.snr.empty() ? parse_grid("--snr-grid", opt.snr_grid)
                                                : Eigen::ArrayXd::Constant(1, parse_finite("--snr", opt.snr));
    const auto rows = complexity_profile(m, snrs, n, seed, delta_grid_of(opt));

    std::string text;
    if (output.json()) {
        json doc;
        doc["config"] = {{"seed", seed}, {"n", n}, {"spec", spec}, {"delta_grid", opt.delta_grid}};
        doc["rows"] = json::array();
        for (const auto& row : rows) {
            doc["rows"].push_back({{"r", row.r}, {"m_star", row.m_star}, {"delta_star", row.delta_star}});
        }
        text = doc.dump(2) + "\n";
    } else {
        std::ostringstream csv;
        csv << metadata(seed, n, spec, {{"delta_grid", opt.delta_grid}, {"samples", "one set per r"}});
        csv << "r,m_star,delta_star\n";
        for (const auto& row : rows) csv << num(row.r) << ',' << num(row.m_star) << ',' << num(row.delta_star) << '\n';
        text = csv.str();
    }
    output.write(opt.out, text, rows.size());
}

void run_zeta(const Options& opt, Output& output) {
    const std::string spec = require(opt.measure, "--measure");
    const Measure m = parse_measure(spec);
    const Index n = parse_count("--samples", opt.samples);
    const std::uint64_t seed = parse_seed(opt.seed);
    const double beta = parse_double("--beta", opt.beta);
    const auto rows = zeta_profile(m, parse_grid("--t-grid", opt.t_grid), parse_list("--M-list", opt.M_list), beta,
                                   n, seed, delta_grid_of(opt));

    std::string text;
    if (output.json()) {
        json doc;
        doc["config"] = {{"seed", seed}, {"n", n}, {"spec", spec}, {"beta", json_num(beta)},
                         {"delta_grid", opt.delta_grid}};
        doc["rows"] = json::array();
        for (const auto& row : rows) {
            doc["rows"].push_back(
                {{"t", row.t}, {"r", row.r}, {"M", json_num(row.M)}, {"zeta_star", json_num(row.zeta_star)}});
        }
        text = doc.dump(2) + "\n";
    } else {
        std::ostringstream csv;
        csv << metadata(seed, n, spec, {{"beta", num(beta)}, {"delta_grid", opt.delta_grid}, {"samples", "one set per t"}});
        csv << "t,r,M,zeta_star\n";
        for (const auto& row : rows) {
            csv << num(row.t) << ',' << num(row.r) << ',' << num(row.M) << ',' << num(row.zeta_star) << '\n';
        }
        text = csv.str();
    }
    output.write(opt.out, text, rows.size());
}

std::string ensemble_csv(const ParticleEnsemble& e, const std::string& head) {
    std::ostringstream csv;
    csv << head << "x\n";
    for (Index i = 0; i < e.size(); ++i) csv << num(e.positions()(i)) << '\n';
    return csv.str();
}

void run_simulate(const Options& opt, Output& output) {
    ChainConfig cfg;
    const std::string mu_spec = require(opt.mu, "--mu");
    const std::string nu_spec = require(opt.nu, "--nu");
    cfg.mu = parse_measure(mu_spec);
    cfg.nu = parse_measure(nu_spec);
    cfg.steps = parse_count("--steps", opt.steps);
    cfg.eta = parse_finite("--eta", opt.eta);
    cfg.beta = parse_double("--beta", opt.beta);
    cfg.particles = parse_count("--particles", opt.particles);
    cfg.seed = parse_seed(opt.seed);
    cfg.equilibrium_restart = !opt.keep_diffused;
    const auto report = run_chain(cfg);

    const std::filesystem::path dir = require(opt.out, "--out");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());

    const std::string spec = "mu=" + mu_spec + " nu=" + nu_spec;
    const std::vector<std::pair<std::string, std::string>> extra{
        {"steps", std::to_string(cfg.steps)},
        {"eta", num(cfg.eta)},
        {"beta", num(cfg.beta)},
        {"restart", cfg.equilibrium_restart ? "equilibrium" : "diffused"}};
    const std::string head = metadata(cfg.seed, cfg.particles, spec, extra);

    if (output.json()) {
        json doc;
        doc["config"] = {{"steps", cfg.steps},   {"eta", cfg.eta},          {"beta", json_num(cfg.beta)},
                         {"particles", cfg.particles}, {"seed", cfg.seed}, {"mu", mu_spec},
                         {"nu", nu_spec},         {"restart", cfg.equilibrium_restart ? "equilibrium" : "diffused"}};
        doc["rows"] = json::array();
        for (const auto& row : report.rows) {
            doc["rows"].push_back(
                {{"k", row.k}, {"t", row.t}, {"w2_forward", row.w2_forward}, {"w2_backward", row.w2_backward}});
        }
        doc["roundtrip_residual"] = report.roundtrip_residual;
        doc["realized_M"] = report.realized_M;
        output.write((dir / "chain.json").string(), doc.dump(2) + "\n", report.rows.size());
    } else {
        std::ostringstream csv;
        csv << metadata(cfg.seed, cfg.particles, spec, extra);
        csv << "# roundtrip_residual=" << num(report.roundtrip_residual) << ", realized_M=" << num(report.realized_M)
            << "\n";
        csv << "k,t,w2_forward,w2_backward\n";
        for (const auto& row : report.rows) {
            csv << row.k << ',' << num(row.t) << ',' << num(row.w2_forward) << ',' << num(row.w2_backward) << '\n';
        }
        output.write((dir / "chain.csv").string(), csv.str(), report.rows.size());
    }
    const std::pair<const char*, const ParticleEnsemble*> ensembles[] = {{"mu0.csv", &report.mu_initial},
                                                                         {"nu0.csv", &report.nu_initial},
                                                                         {"nu_diffused.csv", &report.nu_diffused},
                                                                         {"recovered.csv", &report.recovered}};
    for (const auto& [name, e] : ensembles) {
        output.write((dir / name).string(), ensemble_csv(*e, head), static_cast<size_t>(e->size()));
    }
}

int run_verify(const Options& opt, std::ostream& out) {
    SuiteOptions suite;
    if (opt.suite == "quick") {
        suite.suite = Suite::quick;
    } else if (opt.suite == "full") {
        suite.suite = Suite::full;
    } else {
        throw std::invalid_argument("--suite must be quick or full");
    }
    suite.seed = parse_seed(opt.seed);
    if (!opt.criteria.empty()) {
        for (double id : parse_list("--criteria", opt.criteria)) {
            if (id != std::floor(id) || id < 1 || id > kCriterionCount) {
                throw std::invalid_argument("--criteria: ids run from 1 to " + std::to_string(kCriterionCount));
            }
            suite.only.push_back(static_cast<int>(id));
        }
    }
    const auto results = run_acceptance(suite, nullptr);
    std::ostringstream report;
    print_report(report, results);
    bool all = true;
    for (const auto& r : results) all = all && r.passed();
    if (!opt.out.empty() && opt.out != "-") {
        Output(opt, out).write(opt.out, report.str(), results.size());
    }
    out << report.str();
    return all ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-scale curvature complexity and diffuse-then-denoise simulation for 1-D measures", "msd"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", opt.seed, "Random seed")->capture_default_str();
        sub->add_option("--out", opt.out, "Output path ('-' or omitted: stdout)");
        sub->add_option("--format", opt.format, "csv or json")
            ->check(CLI::IsMember({"csv", "json"}))
            ->capture_default_str();
    };

    auto* survival = app.add_subcommand("survival", "Monte-Carlo survival curve s_r(u) of the localization");
    survival->add_option("--measure", opt.measure, "Measure spec, e.g. mix:0.5@-1@0,0.5@1@0 or unif:-1,1");
    survival->add_option("--snr", opt.snr, "Signal-to-noise ratio r");
    survival->add_option("--u-grid", opt.u_grid, "Threshold grid start:stop:step (default 0:max(2,Lmax):0.005)");
    survival->add_option("--samples", opt.samples, "Monte-Carlo samples")->capture_default_str();
    survival->add_flag("--bands", opt.bands, "Add s_lo,s_hi binomial 95% band columns");
    add_common(survival);

    auto* complexity = app.add_subcommand("complexity", "m*(r) and delta*(r) over an SNR grid");
    complexity->add_option("--measure", opt.measure, "Measure spec");
    complexity->add_option("--snr", opt.snr, "Single SNR (overrides --snr-grid)");
    complexity->add_option("--snr-grid", opt.snr_grid, "SNR grid start:stop:step")->capture_default_str();
    complexity->add_option("--delta-grid", opt.delta_grid, "delta grid start:stop:step")->capture_default_str();
    complexity->add_option("--samples", opt.samples, "Monte-Carlo samples per SNR")->capture_default_str();
    add_common(complexity);

    auto* zeta = app.add_subcommand("zeta", "zeta*_M(t) over a time grid");
    zeta->add_option("--measure", opt.measure, "Measure spec");
    zeta->add_option("--t-grid", opt.t_grid, "Time grid start:stop:step")->capture_default_str();
    zeta->add_option("--M-list", opt.M_list, "Comma-separated M values, inf allowed")->capture_default_str();
    zeta->add_option("--beta", opt.beta, "Inverse temperature")->capture_default_str();
    zeta->add_option("--delta-grid", opt.delta_grid, "delta grid start:stop:step")->capture_default_str();
    zeta->add_option("--samples", opt.samples, "Monte-Carlo samples per time")->capture_default_str();
    add_common(zeta);

    auto* simulate = app.add_subcommand("simulate", "Forward diffusion then backward denoising of particle ensembles");
    simulate->add_option("--mu", opt.mu, "Target measure spec");
    simulate->add_option("--nu", opt.nu, "Initial surrogate measure spec");
    simulate->add_option("--steps", opt.steps, "Number of steps K")->capture_default_str();
    simulate->add_option("--eta", opt.eta, "Step size")->capture_default_str();
    simulate->add_option("--beta", opt.beta, "Inverse temperature")->capture_default_str();
    simulate->add_option("--particles", opt.particles, "Ensemble size")->capture_default_str();
    simulate->add_flag("--keep-diffused", opt.keep_diffused,
                       "Start the backward pass from the diffused ensemble instead of N(0, 1/beta) draws");
    add_common(simulate);

    auto* verify = app.add_subcommand("verify", "Run the acceptance suite");
    verify->add_option("--suite", opt.suite, "quick (n=1e5) or full (n=1e6)")
        ->check(CLI::IsMember({"quick", "full"}))
        ->capture_default_str();
    verify->add_option("--criteria", opt.criteria, "Comma-separated criterion ids (default: all)");
    verify->add_option("--seed", opt.seed, "Random seed")->capture_default_str();
    verify->add_option("--out", opt.out, "Also write the report to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        Output output(opt, out);
        if (survival->parsed()) run_survival(opt, output);
        if (complexity->parsed()) run_complexity(opt, output);
        if (zeta->parsed()) run_zeta(opt, output);
        if (simulate->parsed()) run_simulate(opt, output);
        if (verify->parsed()) return run_verify(opt, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace msd
