// freeprob: free-probability calculator and verification tool.
//
// Subcommands: density, moments, convolve, solve, verify, simulate.
// Reports are JSON objects {command, params, seed, identities, wall_time_ms};
// densities are CSV. Exit codes: 0 = all gates passed, 1 = a verification
// gate failed, 2 = usage or infeasible parameters.

#include <CLI11.hpp>
#include <json.hpp>

#include "freeprob/characterize.hpp"
#include "freeprob/laws.hpp"
#include "freeprob/randmat.hpp"
#include "freeprob/transforms.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

using json = nlohmann::ordered_json;
using namespace freeprob;

namespace {

constexpr std::uint64_t kDefaultSeed = 123456789;
constexpr const char* kSeedEnvVar = "FREEPROB_SEED";

std::uint64_t resolve_seed(const CLI::Option* seed_opt, std::uint64_t flag_value) {
    if (seed_opt->count() > 0) return flag_value;
    if (const char* env = std::getenv(kSeedEnvVar)) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0') return static_cast<std::uint64_t>(v);
    }
    return kDefaultSeed;
}

struct ReportWriter {
    json doc;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    ReportWriter(const std::string& command, json params, std::uint64_t seed) {
        doc["command"] = command;
        doc["params"] = std::move(params);
        doc["seed"] = seed;
        doc["identities"] = json::array();
    }

    void add(const IdentityCheck& c) {
        json e;
        e["name"] = c.name;
        e["residual_max"] = c.normalized;
        e["pass"] = c.pass;
        e["raw_max"] = c.residual_max;
        e["scale"] = c.scale;
        e["tol"] = c.tol;
        if (c.negative_control) e["negative_control"] = true;
        doc["identities"].push_back(std::move(e));
    }

    void add(const IdentityReport& rep) {
        for (const auto& c : rep.checks) add(c);
    }

    void add(const McEntry& e) {
        json j;
        j["name"] = e.name;
        j["residual_max"] = std::abs(e.estimate);
        j["pass"] = e.pass;
        j["estimate"] = e.estimate;
        j["stderr"] = e.stderr_;
        j["scale"] = e.scale;
        j["allowance"] = e.allowance;
        doc["identities"].push_back(std::move(j));
    }

    void add_value(const std::string& name, double value, bool pass = true, double residual = 0.0) {
        json e;
        e["name"] = name;
        e["residual_max"] = residual;
        e["pass"] = pass;
        e["value"] = value;
        doc["identities"].push_back(std::move(e));
    }

    bool all_pass() const {
        for (const auto& e : doc["identities"])
            if (!e["pass"].get<bool>()) return false;
        return true;
    }

    int emit(const std::string& out_path, const std::string& format) {
        auto dt = std::chrono::steady_clock::now() - t0;
        doc["wall_time_ms"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(dt).count();
        if (format == "json") {
            if (out_path.empty()) {
                std::cout << doc.dump(2) << "\n";
            } else {
                std::ofstream os(out_path);
                os << doc.dump(2) << "\n";
            }
        }
        return all_pass() ? 0 : 1;
    }
};

struct LawArgs {
    double lambda = 2.0, alpha = 1.0;
    double sigma = 1.0, theta = 2.0;
    std::string kind = "poisson";
};

void add_law_options(CLI::App* cmd, LawArgs& args) {
    cmd->add_option("--law", args.kind, "law family: poisson or binomial")
        ->check(CLI::IsMember({"poisson", "binomial"}));
    cmd->add_option("--lambda", args.lambda, "free Poisson rate");
    cmd->add_option("--alpha", args.alpha, "free Poisson jump size");
    cmd->add_option("--sigma", args.sigma, "free binomial sigma");
    cmd->add_option("--theta", args.theta, "free binomial theta");
}

json law_params_json(const LawArgs& a) {
    json p;
    p["law"] = a.kind;
    if (a.kind == "poisson") {
        p["lambda"] = a.lambda;
        p["alpha"] = a.alpha;
    } else {
        p["sigma"] = a.sigma;
        p["theta"] = a.theta;
    }
    return p;
}

// "poisson:3,1" or "binomial:1,2"
std::pair<std::string, std::pair<double, double>> parse_law_spec(const std::string& s) {
    auto colon = s.find(':');
    auto comma = s.find(',', colon);
    if (colon == std::string::npos || comma == std::string::npos)
        throw CLI::ValidationError("law spec must look like poisson:3,1 or binomial:1,2");
    std::string kind = s.substr(0, colon);
    if (kind != "poisson" && kind != "binomial")
        throw CLI::ValidationError("unknown law family: " + kind);
    double a = std::stod(s.substr(colon + 1, comma - colon - 1));
    double b = std::stod(s.substr(comma + 1));
    return {kind, {a, b}};
}

std::vector<double> law_spec_moments(const std::string& spec, int n) {
    auto [kind, par] = parse_law_spec(spec);
    if (kind == "poisson") return law_moments(FreePoissonLaw(par.first, par.second), n);
    return law_moments(FreeBinomialLaw(par.first, par.second), n);
}

int run_density(const LawArgs& args, int points, const std::string& out_path) {
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path);
        os = &file;
    }
    if (args.kind == "poisson")
        write_density_csv(*os, FreePoissonLaw(args.lambda, args.alpha), points);
    else
        write_density_csv(*os, FreeBinomialLaw(args.sigma, args.theta), points);
    return 0;
}

int run_moments(const LawArgs& args, int n, int nodes, std::uint64_t seed,
                const std::string& out_path, const std::string& format) {
    ReportWriter w("moments", law_params_json(args), seed);
    std::vector<double> ms, mq;
    if (args.kind == "poisson") {
        FreePoissonLaw law(args.lambda, args.alpha);
        ms = law_moments(law, n, MomentMethod::Series);
        mq = law_moments(law, n, MomentMethod::Quadrature, nodes);
        double cont = poisson_continuous_mass(law, nodes);
        double total = law.atom_mass() + cont;
        double literal = law.atom_mass() + law.lambda * cont;
        w.add_value("total_mass", total, std::abs(total - 1.0) <= 1e-8, std::abs(total - 1.0));
        // informational: the literal lambda-multiplier decomposition misses 1
        // whenever lambda != 1
        w.add_value("lambda_scaled_split_mass", literal, true, std::abs(literal - 1.0));
    } else {
        FreeBinomialLaw law(args.sigma, args.theta);
        ms = law_moments(law, n, MomentMethod::Series);
        mq = law_moments(law, n, MomentMethod::Quadrature, nodes);
        auto mu = discretize(law, nodes);
        double total = to_double(mu.total_mass());
        w.add_value("total_mass", total, std::abs(total - 1.0) <= 1e-8, std::abs(total - 1.0));
    }
    for (int k = 1; k <= n; ++k) {
        double a = ms[static_cast<size_t>(k - 1)], b = mq[static_cast<size_t>(k - 1)];
        double resid = std::abs(a - b) / std::max(1.0, std::abs(a));
        json e;
        e["name"] = "moment_n" + std::to_string(k);
        e["residual_max"] = resid;
        e["pass"] = resid <= 1e-7;
        e["series"] = a;
        e["quadrature"] = b;
        w.doc["identities"].push_back(std::move(e));
    }
    return w.emit(out_path, format);
}

int run_convolve(const std::string& op, const std::string& law1, const std::string& law2, int n,
                 std::uint64_t seed, const std::string& out_path, const std::string& format) {
    json params;
    params["op"] = op;
    params["law1"] = law1;
    params["law2"] = law2;
    params["n"] = n;
    ReportWriter w("convolve", params, seed);
    int work = std::max(n + 2, kDefaultSeriesOrder);
    auto m1 = law_spec_moments(law1, work);
    auto m2 = law_spec_moments(law2, work);
    std::vector<double> out;
    if (op == "add") {
        auto r = free_add(r_from_moments(m1), r_from_moments(m2));
        out = moments_from_cumulants(std::vector<double>(r.s.c.begin(), r.s.c.begin() + n));
    } else {
        auto s1 = s_from_moment_series(moment_series_from_moments(m1));
        auto s2 = s_from_moment_series(moment_series_from_moments(m2));
        out = free_mult(s1, s2, n).moments(n);
    }
    for (int k = 1; k <= n; ++k)
        w.add_value("moment_n" + std::to_string(k), out[static_cast<size_t>(k - 1)]);
    return w.emit(out_path, format);
}

int run_solve(int theorem, double c, double d, double F, std::uint64_t seed,
              const std::string& out_path, const std::string& format) {
    TheoremParams p = theorem == 1 ? solve_thm1(c, d, F) : solve_thm2(c, d, F);
    json params;
    params["theorem"] = theorem;
    params["c"] = c;
    params["d"] = d;
    params["F"] = F;
    ReportWriter w("solve", params, seed);
    w.add_value("lambda", p.lambda);
    w.add_value("alpha", p.alpha);
    w.add_value("sigma", p.sigma);
    w.add_value("theta", p.theta);
    double consistency = std::abs(p.lambda - (p.sigma + p.theta));
    w.add_value("lambda_eq_sigma_plus_theta", p.lambda, consistency <= 1e-12, consistency);
    if (format != "json")
        std::cout << "lambda=" << p.lambda << " alpha=" << p.alpha << " sigma=" << p.sigma
                  << " theta=" << p.theta << "\n";
    return w.emit(out_path, format);
}

int run_verify(const std::string& target, const LawArgs& args, int order, int nodes, double tol,
               std::uint64_t seed, const std::string& out_path, const std::string& format) {
    json params;
    params["target"] = target;
    if (target == "lemma33") {
        params["lambda"] = args.lambda;
        params["alpha"] = args.alpha;
    } else {
        params["sigma"] = args.sigma;
        params["theta"] = args.theta;
        params["alpha"] = args.alpha;
    }
    params["order"] = order;
    params["nodes"] = nodes;
    ReportWriter w("verify", params, seed);
    if (target == "thm1" || target == "thm2") {
        double use_tol = tol > 0 ? tol : (target == "thm1" ? 1e-8 : 1e-7);
        auto model = make_pair_model(args.sigma, args.theta, args.alpha, nodes);
        auto pert = make_pair_model(args.sigma, args.theta + 0.1, args.alpha, nodes);
        IdentityReport rep = target == "thm1"
                                 ? verify_identities_thm1(model, order, use_tol, 1e-3, &pert)
                                 : verify_identities_thm2(model, order, use_tol, 1e-3, &pert);
        w.add(rep);
    } else if (target == "prop31") {
        auto model = make_pair_model(args.sigma, args.theta, args.alpha, nodes);
        w.add(verify_prop31(model, std::min(order, 6), tol > 0 ? tol : 1e-8, 1e-9));
    } else if (target == "prop32") {
        w.add(verify_prop32(args.sigma, args.theta, args.alpha, std::min(order, 6),
                            tol > 0 ? tol : 1e-8, nodes));
    } else {
        w.add(verify_lemma33(args.lambda, args.alpha, order, tol > 0 ? tol : 1e-10, nodes));
    }
    w.doc["params"]["tol"] = tol;
    return w.emit(out_path, format);
}

int run_simulate(int theorem, const LawArgs& args, int dim, int trials, int n_max,
                 std::uint64_t seed, double c_abs, bool with_esd, const std::string& out_path,
                 const std::string& format) {
    json params;
    params["sigma"] = args.sigma;
    params["theta"] = args.theta;
    params["alpha"] = args.alpha;
    params["theorem"] = theorem;
    params["dim"] = dim;
    params["trials"] = trials;
    params["n_max"] = n_max;
    params["c_abs"] = c_abs;
    ReportWriter w("simulate", params, seed);
    McTarget target = theorem == 1 ? McTarget::T1 : (theorem == 2 ? McTarget::T2 : McTarget::Both);
    auto rep = mc_regression_check(args.sigma, args.theta, args.alpha, dim, trials, target, n_max,
                                   seed, c_abs);
    for (const auto& e : rep.entries) w.add(e);
    if (with_esd) {
        // spectrum of V^{1/2} U V^{1/2} against nu(sigma, alpha)
        Rng rng = Rng::stream(seed, 0xe5d);
        int n_esd = std::max(dim, 256);
        FreePoissonLaw lawV(args.sigma + args.theta, args.alpha);
        FreeBinomialLaw lawU(args.sigma, args.theta);
        Sampler sv(lawV), su(lawU);
        std::vector<double> dv(static_cast<size_t>(n_esd)), du(static_cast<size_t>(n_esd));
        for (double& x : dv) x = sv.draw(rng);
        for (double& x : du) x = su.draw(rng);
        std::vector<double> sq(static_cast<size_t>(n_esd));
        for (int i = 0; i < n_esd; ++i) sq[static_cast<size_t>(i)] = std::sqrt(dv[static_cast<size_t>(i)]);
        Matrix Vh = rotate_diag(haar_orthogonal(n_esd, rng), sq);
        Matrix U = rotate_diag(haar_orthogonal(n_esd, rng), du);
        Matrix X = matmul(matmul(Vh, U), Vh);
        double dist = esd_distance(sym_eig(X), make_cdf(FreePoissonLaw(args.sigma, args.alpha)));
        json e;
        e["name"] = "esd_distance";
        e["residual_max"] = dist;
        e["pass"] = dist <= 0.05;
        w.doc["identities"].push_back(std::move(e));
    }
    return w.emit(out_path, format);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"free-probability calculator: moments, transforms, law "
                 "characterizations and Monte Carlo checks"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand

    std::uint64_t seed_flag = kDefaultSeed;
    auto* seed_opt = app.add_option("--seed", seed_flag,
                                    "RNG seed (overrides FREEPROB_SEED; default 123456789)");
    std::string out_path, format = "json";
    app.add_option("--out", out_path, "write the report to this path instead of stdout");
    app.add_option("--format", format, "report format")->check(CLI::IsMember({"json", "text"}));

    LawArgs law;
    int points = 512, n = 8, nodes = 2048, order = 10, dim = 400, trials = 200, n_max = 4;
    double tol = 0, c = 0, d = 0, F = 0, c_abs = 8.0;
    int theorem = 1;
    bool with_esd = false;
    std::string target, op = "mult", law1, law2;

    auto* cmd_density = app.add_subcommand("density", "tabulate a density as CSV (x,density)");
    add_law_options(cmd_density, law);
    cmd_density->add_option("--points", points, "grid size");

    auto* cmd_moments = app.add_subcommand("moments", "law moments, series vs quadrature");
    add_law_options(cmd_moments, law);
    cmd_moments->add_option("--n", n, "highest moment order");
    cmd_moments->add_option("--nodes", nodes, "quadrature nodes");

    auto* cmd_convolve = app.add_subcommand("convolve", "free additive or multiplicative convolution");
    cmd_convolve->add_option("--op", op, "add or mult")->check(CLI::IsMember({"add", "mult"}));
    cmd_convolve->add_option("--law1", law1, "first law, e.g. poisson:3,1")->required();
    cmd_convolve->add_option("--law2", law2, "second law, e.g. binomial:1,2")->required();
    cmd_convolve->add_option("--n", n, "moments to report");

    auto* cmd_solve = app.add_subcommand("solve", "recover law parameters from regression constants");
    cmd_solve->add_option("--theorem", theorem, "1 or 2")->check(CLI::IsMember({1, 2}))->required();
    cmd_solve->add_option("--c", c, "first regression constant")->required();
    cmd_solve->add_option("--d", d, "second regression constant")->required();
    cmd_solve->add_option("--F", F, "resolvent mean phi((I-U)^{-1})")->required();

    auto* cmd_verify = app.add_subcommand("verify", "run an identity verification suite");
    cmd_verify->add_option("target", target, "prop31, prop32, lemma33, thm1 or thm2")
        ->required()
        ->check(CLI::IsMember({"prop31", "prop32", "lemma33", "thm1", "thm2"}));
    add_law_options(cmd_verify, law);
    cmd_verify->add_option("--order", order, "verification order");
    cmd_verify->add_option("--nodes", nodes, "quadrature nodes");
    cmd_verify->add_option("--tol", tol, "override the gate tolerance");

    auto* cmd_simulate = app.add_subcommand("simulate", "Monte Carlo regression residuals");
    cmd_simulate->add_option("--theorem", theorem, "1, 2, or 0 for both")
        ->check(CLI::IsMember({0, 1, 2}));
    add_law_options(cmd_simulate, law);
    cmd_simulate->add_option("--dim", dim, "matrix dimension");
    cmd_simulate->add_option("--trials", trials, "Monte Carlo trials");
    cmd_simulate->add_option("--n-max", n_max, "highest moment order in the trace identities");
    cmd_simulate->add_option("--c-abs", c_abs, "finite-size allowance constant");
    cmd_simulate->add_flag("--esd", with_esd, "also run the spectral-distance check");

    CLI11_PARSE(app, argc, argv);

    try {
        std::uint64_t seed = resolve_seed(seed_opt, seed_flag);
        if (cmd_density->parsed()) return run_density(law, points, out_path);
        if (cmd_moments->parsed()) return run_moments(law, n, nodes, seed, out_path, format);
        if (cmd_convolve->parsed())
            return run_convolve(op, law1, law2, n, seed, out_path, format);
        if (cmd_solve->parsed()) return run_solve(theorem, c, d, F, seed, out_path, format);
        if (cmd_verify->parsed())
            return run_verify(target, law, order, nodes, tol, seed, out_path, format);
        if (cmd_simulate->parsed())
            return run_simulate(theorem, law, dim, trials, n_max, seed, c_abs, with_esd, out_path,
                                format);
    } catch (const InfeasibleConstants& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const ThetaNotGreaterThanOne& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 2;
}
