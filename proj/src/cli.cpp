#include "qlab/cli.hpp"

#include "qlab/classify.hpp"
#include "qlab/cylgeom.hpp"
#include "qlab/errors.hpp"
#include "qlab/oscsum.hpp"
#include "qlab/qform.hpp"
#include "qlab/suite.hpp"
#include "qlab/transversality.hpp"

#include "CLI11.hpp"

#include <omp.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#ifndef QLAB_VERSION
#define QLAB_VERSION "0.0.0"
#endif

namespace qlab {

namespace fs = std::filesystem;

std::string version_string()
{
    return std::string("qlab ") + QLAB_VERSION;
}

namespace {

struct Options {
    std::string pair, cubes, out, in, g = "one", plane, eta = "1/2", subcase = "auto", margin = "auto";
    std::string x = "N", y = "ratio", p_filter;
    std::vector<long> Ns{16};
    std::vector<std::string> ps{"2"};
    std::vector<int> dims{1, 2, 4};
    std::size_t samples = 4096, mc = 100000, batches = 100, iterations = 20000;
    std::uint64_t seed = 0, g_seed = 0;
    double refine_fraction = 0.01, C = 100, h = 0, ball_scale = 1, eta_bound = 10, threshold = 0.01;
    std::string eta_grid = "1/32";
    bool json = false, audit = false, force = false, quick = false;
    std::string manifest;
    int threads = 0;
};

void emit(const std::string& text, const std::string& path, std::ostream& out)
{
    if (path.empty()) {
        out << text;
        return;
    }
    if (const auto parent = fs::path(path).parent_path(); !parent.empty())
        fs::create_directories(parent);
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw InvalidArgument("cannot write " + path);
    f << text;
}

std::string dump(const nlohmann::json& j)
{
    return j.dump(2) + "\n";
}

void apply_threads(int flag)
{
    static const int initial = omp_get_max_threads();
    int n = initial;
    if (const char* env = std::getenv("QLAB_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap > 0)
                n = std::min(n, cap);
        } catch (const std::exception&) {
            throw InvalidArgument(std::string("QLAB_THREADS is not an integer: ") + env);
        }
    }
    if (flag > 0)
        n = std::min(n, flag);
    omp_set_num_threads(n);
}

std::vector<double> parse_ps(const std::vector<std::string>& ps)
{
    std::vector<double> v;
    for (const auto& s : ps)
        v.push_back(parse_rational(s).get_d());
    return v;
}

Plane parse_plane(const std::string& text, Rational* slab = nullptr)
{
    std::vector<Rational> v;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ',');)
        v.push_back(parse_rational(part));
    if (v.size() != 3 && !(slab && v.size() == 4))
        throw InvalidArgument("plane expects alpha,beta,gamma" + std::string(slab ? "[,slab]" : ""));
    if (slab)
        *slab = v.size() == 4 ? v[3] : Rational(0);
    return {v[0], v[1], v[2]};
}

nlohmann::json mat_json(const Mat3Q& m)
{
    nlohmann::json j = nlohmann::json::array();
    for (const auto& row : m)
        j.push_back({rational_to_json(row[0]), rational_to_json(row[1]), rational_to_json(row[2])});
    return j;
}

template <class M>
nlohmann::json dense_json(const M& m)
{
    nlohmann::json j = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            row.push_back(m(r, c));
        j.push_back(row);
    }
    return j;
}

int cmd_check(const Options& o, std::ostream& out)
{
    const auto pair = load_pair(o.pair);
    const auto v = nondegeneracy_check(pair);
    if (o.json) {
        emit(dump(to_json(v)), o.out, out);
    } else {
        std::string text = to_string(v.verdict);
        if (v.witness)
            text += " witness (" + to_string((*v.witness)[0]) + ", " + to_string((*v.witness)[1]) + ", " + to_string((*v.witness)[2]) + ")";
        emit(text + "\n", o.out, out);
    }
    return v.verdict == Verdict::Nondegenerate ? kExitOk : kExitVerdict;
}

int cmd_classify(const Options& o, std::ostream& out)
{
    const auto pair = load_pair(o.pair);
    const auto r = classify(pair, std::pair{o.eta_bound, parse_rational(o.eta_grid).get_d()});
    emit(dump(to_json(r)), o.out, out);
    return r.nondegeneracy.verdict == Verdict::Nondegenerate ? kExitOk : kExitVerdict;
}

int cmd_reduce(const Options& o, std::ostream& out)
{
    const auto pair = load_pair(o.pair);
    nlohmann::json j;
    try {
        const auto n = normal_form(pair);
        j["reducible"] = true;
        j["mode"] = n.exact ? "exact" : "binary64";
        if (n.exact) {
            j["A"] = rational_to_json(*n.A_exact);
            j["B"] = rational_to_json(*n.B_exact);
            j["M"] = mat_json(*n.M_exact);
            const auto& b = *n.beta_exact;
            j["beta"] = {{rational_to_json(b[0][0]), rational_to_json(b[0][1])}, {rational_to_json(b[1][0]), rational_to_json(b[1][1])}};
        } else {
            j["A"] = n.A;
            j["B"] = n.B;
            j["M"] = dense_json(n.M);
            j["beta"] = dense_json(n.beta);
        }
        j["reconstruction_error"] = n.reconstruction_error;
    } catch (const NotReducible& e) {
        j = {{"reducible", false}, {"reason", e.what()}};
        emit(dump(j), o.out, out);
        return kExitVerdict;
    }
    emit(dump(j), o.out, out);
    return kExitOk;
}

int cmd_transversality(const Options& o, std::ostream& out)
{
    const auto pair = load_pair(o.pair);
    const auto cubes = load_collection(o.cubes);
    NuOptions opt;
    opt.dims = o.dims;
    opt.samples = o.samples;
    opt.seed = o.seed;
    opt.refine_fraction = o.refine_fraction;
    emit(dump(to_json(nu_estimate(cubes, pair, opt))), o.out, out);
    return kExitOk;
}

int cmd_cluster(const Options& o, std::ostream& out)
{
    const auto cubes = load_collection(o.cubes);
    ClusterOptions opt;
    opt.margin = o.margin == "auto" ? 0.0 : parse_rational(o.margin).get_d();
    opt.ransac_iterations = o.iterations;
    opt.threshold_fraction = o.threshold;
    opt.seed = o.seed;
    emit(dump(to_json(quadric_cluster_detect(cubes, opt))), o.out, out);
    return kExitOk;
}

nlohmann::json audit_json(const SymbolicAudit& a)
{
    return {{"case1_sub1_constant", a.case1_sub1_constant}, {"case1_sub2_constant", a.case1_sub2_constant},
            {"case1_fm2", a.case1_fm2},                     {"case3_star_constant", a.case3_star_constant},
            {"case3_det", a.case3_det},                     {"form1", a.form1},
            {"ok", a.ok()}};
}

int cmd_cylinder(const Options& o, std::ostream& out)
{
    if (o.audit) {
        const auto a = generic_symbolic_audit();
        emit(dump(audit_json(a)), o.out, out);
        return a.ok() ? kExitOk : kExitVerdict;
    }
    const auto pair = load_pair(o.pair);
    Rational slab;
    const Plane plane = parse_plane(o.plane, &slab);
    nlohmann::json j;
    try {
        const auto split = case_split(pair, plane, parse_rational(o.eta));
        j["split"] = to_json(split);
        CylinderFrame fr;
        if (o.subcase == "auto") {
            fr = cylinder_frame(split, slab);
        } else {
            const Subcase sub = o.subcase == "1" ? Subcase::First : o.subcase == "2" ? Subcase::Second : throw InvalidArgument("subcase is auto, 1 or 2");
            if (split.kase == PlaneCase::CASE1_A)
                fr = cylinder_frame_case1(split.coeffs, plane, slab, split.eta, sub);
            else if (split.kase == PlaneCase::CASE2_B)
                fr = cylinder_frame_case2(split.coeffs, plane, slab, split.eta, sub);
            else
                fr = cylinder_frame_case3(split.coeffs, plane, split.eta);
        }
        j["frame"] = to_json(fr);
    } catch (const EtaViolated& e) {
        j["error"] = {{"type", "EtaViolated"}, {"message", e.what()}};
    } catch (const CaseHypothesisFailed& e) {
        j["error"] = {{"type", "CaseHypothesisFailed"}, {"message", e.what()}};
    } catch (const SubcaseHypothesisFailed& e) {
        j["error"] = {{"type", "SubcaseHypothesisFailed"}, {"message", e.what()}};
    }
    emit(dump(j), o.out, out);
    return j.contains("error") ? kExitVerdict : kExitOk;
}

int cmd_expsum(const Options& o, std::ostream& out)
{
    const auto pair = load_pair(o.pair);
    const auto ps = parse_ps(o.ps);
    std::vector<ExperimentRecord> recs;
    for (long N : o.Ns)
        for (const auto& e : exp_sum_lp_average(pair, N, ps, o.mc, o.seed, o.batches))
            recs.push_back(to_record(pair, e));
    std::ostringstream ss;
    write_csv(ss, recs);
    emit(ss.str(), o.out, out);
    return kExitOk;
}

DensitySpec parse_density(const std::string& text, std::uint64_t seed)
{
    DensitySpec g;
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (kind == "one") {
        g.kind = DensityKind::ONE;
    } else if (kind == "random") {
        g.kind = DensityKind::RANDOM_UNIT_MODULUS;
        g.seed = seed;
    } else if (kind == "delta") {
        g.kind = DensityKind::SINGLE_DELTA;
        if (!arg.empty()) {
            std::stringstream ss(arg);
            std::string part;
            for (auto& c : g.delta) {
                if (!std::getline(ss, part, ','))
                    throw InvalidArgument("delta expects i,j,k");
                c = std::stol(part);
            }
        }
    } else if (kind == "plane") {
        g.kind = DensityKind::PLANE_CLUSTER;
        g.plane = parse_plane(arg);
    } else if (kind == "product") {
        g.kind = DensityKind::PRODUCT;
    } else {
        throw InvalidArgument("unknown density " + text);
    }
    return g;
}

int cmd_ratio(const Options& o, std::ostream& out)
{
    const auto pair = load_pair(o.pair);
    const auto ps = parse_ps(o.ps);
    SamplingConfig cfg;
    cfg.mc = o.mc;
    cfg.seed = o.seed;
    cfg.batches = o.batches;
    cfg.C = o.C;
    cfg.h = o.h;
    cfg.ball_scale = o.ball_scale;
    const DensitySpec g = parse_density(o.g, o.g_seed ? o.g_seed : o.seed + 1);
    std::vector<ExperimentRecord> recs;
    for (long N : o.Ns) {
        if (g.kind == DensityKind::PLANE_CLUSTER) {
            for (double p : ps)
                recs.push_back(plane_cluster_ratio(pair, g.plane, N, p, cfg));
        } else if (g.kind == DensityKind::PRODUCT) {
            for (double p : ps)
                recs.push_back(degenerate_product_bound(pair, {N}, p, cfg).records.front());
        } else {
            for (auto& r : decoupling_ratio(pair, g, N, ps, cfg))
                recs.push_back(std::move(r));
        }
    }
    std::ostringstream ss;
    write_csv(ss, recs);
    emit(ss.str(), o.out, out);
    return kExitOk;
}

int cmd_fit(const Options& o, std::ostream& out)
{
    std::ifstream f(o.in, std::ios::binary);
    if (!f)
        throw SchemaError("cannot open " + o.in);
    const auto t = read_csv(f, o.in);
    const std::size_t cx = t.column(o.x), cy = t.column(o.y), ch = t.column("pair_hash"), cp = t.column("p");
    std::optional<double> pf;
    if (!o.p_filter.empty())
        pf = parse_rational(o.p_filter).get_d();
    std::set<std::string> hashes;
    std::set<double> pvals;
    std::vector<std::pair<double, double>> xy;
    for (const auto& row : t.rows) {
        const double p = std::stod(row[cp]);
        if (pf && std::abs(p - *pf) > 1e-9 * std::max(1.0, std::abs(*pf)))
            continue;
        hashes.insert(row[ch]);
        pvals.insert(p);
        xy.emplace_back(std::stod(row[cx]), std::stod(row[cy]));
    }
    if (hashes.size() > 1 && !o.force)
        throw InvalidArgument(o.in + " mixes rows of " + std::to_string(hashes.size()) + " pair hashes; pass --force to fit anyway");
    if (pvals.size() > 1 && !o.force)
        throw InvalidArgument(o.in + " mixes " + std::to_string(pvals.size()) + " values of p; select one with --p");
    const auto fit = fit_scaling(xy);
    nlohmann::json j;
    j["slope"] = fit.slope;
    j["intercept"] = fit.intercept;
    j["residual"] = fit.residual;
    j["ci_half_width"] = fit.ci_half_width;
    j["points"] = fit.points;
    j["x"] = o.x;
    j["y"] = o.y;
    j["pair_hashes"] = hashes;
    j["p"] = pvals;
    emit(dump(j), o.out, out);
    return kExitOk;
}

int cmd_suite(const Options& o, std::ostream& out)
{
    SuiteOptions opt;
    opt.out_dir = o.out.empty() ? "qlab-suite" : o.out;
    opt.quick = o.quick;
    opt.seed = o.seed;
    const auto report = paper_suite(opt);
    out << summary_table(report);
    return report.all_pass() ? kExitOk : kExitVerdict;
}

int cmd_run(const Options& o, std::ostream& out)
{
    const auto report = run_manifest(o.manifest);
    out << dump(to_json(report));
    return report.all_pass() ? kExitOk : kExitVerdict;
}

} // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    Options o;
    CLI::App app{"Decoupling lab for pairs of ternary quadratic forms", "qlab"};
    app.set_config("--config", "", "TOML file mirroring the flags; the command line takes precedence");
    app.set_version_flag("--version", version_string());
    app.add_option("--threads", o.threads, "Thread cap (QLAB_THREADS also caps)");
    app.require_subcommand(1);

    auto pair_opt = [&](CLI::App* s) { s->add_option("--pair", o.pair, "Pair file (JSON)")->required(); };
    auto out_opt = [&](CLI::App* s, const char* what) { s->add_option("--out", o.out, what); };

    auto* check = app.add_subcommand("check", "Exact nondegeneracy verdict");
    pair_opt(check);
    check->add_flag("--json", o.json, "Full verdict as JSON");
    out_opt(check, "Output file");

    auto* cls = app.add_subcommand("classify", "Verdict, simultaneous diagonalization, minor taxonomy, normal form, eta");
    pair_opt(cls);
    cls->add_option("--eta-bound", o.eta_bound, "Search box for (beta, gamma)");
    cls->add_option("--eta-grid", o.eta_grid, "Grid step");
    out_opt(cls, "Output file");

    auto* red = app.add_subcommand("reduce", "Normal form (1/2 (r^2 + A s^2), 1/2 (t^2 + B s^2))");
    pair_opt(red);
    out_opt(red, "Output file");

    auto* tr = app.add_subcommand("transversality", "nu estimate over a cube collection");
    pair_opt(tr);
    tr->add_option("--cubes", o.cubes, "Cube collection (JSON)")->required();
    tr->add_option("--dims", o.dims, "Subspace dimensions")->delimiter(',');
    tr->add_option("--samples", o.samples, "Subspaces per dimension");
    tr->add_option("--seed", o.seed, "Seed");
    tr->add_option("--refine-fraction", o.refine_fraction, "Share of subspaces refined");
    out_opt(tr, "Output file");

    auto* cl = app.add_subcommand("cluster", "Quadric cluster detection");
    cl->add_option("--cubes", o.cubes, "Cube collection (JSON)")->required();
    cl->add_option("--margin", o.margin, "Band half-width or auto");
    cl->add_option("--iterations", o.iterations, "RANSAC iterations");
    cl->add_option("--threshold", o.threshold, "Cluster threshold as a share of the cubes");
    cl->add_option("--seed", o.seed, "Seed");
    out_opt(cl, "Output file");

    auto* cy = app.add_subcommand("cylinder", "Case split and cylinder frame over a plane");
    cy->add_option("--pair", o.pair, "Pair file (JSON)");
    cy->add_option("--plane", o.plane, "alpha,beta,gamma[,slab]");
    cy->add_option("--eta", o.eta, "eta");
    cy->add_option("--subcase", o.subcase, "auto, 1 or 2");
    cy->add_flag("--audit", o.audit, "Symbolic audit over indeterminate coefficients");
    out_opt(cy, "Output file");

    auto* es = app.add_subcommand("expsum", "L^p averages of the lattice exponential sum");
    pair_opt(es);
    es->add_option("--N", o.Ns, "Scales")->delimiter(',');
    es->add_option("--p", o.ps, "Exponents")->delimiter(',');
    es->add_option("--mc", o.mc, "Samples");
    es->add_option("--seed", o.seed, "Seed");
    es->add_option("--batches", o.batches, "Batches for the standard error");
    out_opt(es, "CSV output");

    auto* ra = app.add_subcommand("ratio", "Decoupling ratio estimates");
    pair_opt(ra);
    ra->add_option("--g", o.g, "one | random | delta[:i,j,k] | plane:a,b,c | product");
    ra->add_option("--N", o.Ns, "Scales (powers of 4)")->delimiter(',');
    ra->add_option("--p", o.ps, "Exponents")->delimiter(',');
    ra->add_option("--mc", o.mc, "Samples");
    ra->add_option("--seed", o.seed, "Seed");
    ra->add_option("--g-seed", o.g_seed, "Seed of the random density (default seed + 1)");
    ra->add_option("--batches", o.batches, "Batches for the standard error");
    ra->add_option("--C", o.C, "Weight exponent");
    ra->add_option("--step", o.h, "Nominal quadrature step (0: 1/(8N))");
    ra->add_option("--ball-scale", o.ball_scale, "Ball radius in units of N");
    out_opt(ra, "CSV output");

    auto* fi = app.add_subcommand("fit", "Log-log fit of a CSV column");
    fi->add_option("--in", o.in, "CSV input")->required();
    fi->add_option("--x", o.x, "x column");
    fi->add_option("--y", o.y, "y column");
    fi->add_option("--p", o.p_filter, "Keep rows with this p");
    fi->add_flag("--force", o.force, "Fit rows of different pairs or exponents together");
    out_opt(fi, "Output file");

    auto* su = app.add_subcommand("suite", "Every acceptance criterion with pinned seeds");
    su->add_flag("--quick", o.quick, "Reduced grids; the report is NON-CERTIFYING");
    su->add_option("--out", o.out, "Output directory");
    su->add_option("--seed", o.seed, "Seed")->default_val(42);

    auto* run = app.add_subcommand("run", "Execute an experiment manifest");
    run->add_option("--manifest", o.manifest, "Manifest (JSON)")->required();

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitError;
    }

    try {
        apply_threads(o.threads);
        if (check->parsed())
            return cmd_check(o, out);
        if (cls->parsed())
            return cmd_classify(o, out);
        if (red->parsed())
            return cmd_reduce(o, out);
        if (tr->parsed())
            return cmd_transversality(o, out);
        if (cl->parsed())
            return cmd_cluster(o, out);
        if (cy->parsed()) {
            if (!o.audit && (o.pair.empty() || o.plane.empty()))
                throw InvalidArgument("cylinder needs --pair and --plane, or --audit");
            return cmd_cylinder(o, out);
        }
        if (es->parsed())
            return cmd_expsum(o, out);
        if (ra->parsed())
            return cmd_ratio(o, out);
        if (fi->parsed())
            return cmd_fit(o, out);
        if (su->parsed())
            return cmd_suite(o, out);
        if (run->parsed())
            return cmd_run(o, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}

// ---------------------------------------------------------------------------

namespace {

bool takes_pair(const std::string& s)
{
    static const std::set<std::string> k{"check", "classify", "reduce", "transversality", "cylinder", "expsum", "ratio"};
    return k.count(s) > 0;
}

bool takes_seed(const std::string& s)
{
    static const std::set<std::string> k{"transversality", "cluster", "expsum", "ratio", "suite"};
    return k.count(s) > 0;
}

bool has_flag(const std::vector<std::string>& args, const std::string& flag)
{
    for (const auto& a : args)
        if (a == flag || a.rfind(flag + "=", 0) == 0)
            return true;
    return false;
}

std::string read_file(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string verdict_of(const std::string& text)
{
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.is_object() && j.contains("verdict") && j["verdict"].is_string())
            return j["verdict"];
        if (j.is_object() && j.contains("nondegeneracy"))
            return j["nondegeneracy"].value("verdict", "");
    } catch (const nlohmann::json::exception&) {
    }
    std::istringstream ss(text);
    std::string first;
    ss >> first;
    return first == "NONDEGENERATE" || first == "DEGENERATE" ? first : "";
}

CriterionVerdict verdict_from_json(const nlohmann::json& j)
{
    CriterionVerdict v;
    v.id = j.at("id");
    v.name = j.at("name");
    v.measured = j.at("measured");
    v.target = j.at("target");
    v.pass = j.at("pass");
    v.artifacts = j.value("artifacts", std::vector<std::string>{});
    return v;
}

} // namespace

RunReport run_manifest(const nlohmann::json& m, const std::string& base_dir, const std::string& source)
{
    if (!m.is_object())
        throw SchemaError(source + ": manifest must be an object");
    static const std::set<std::string> keys{"pair", "seed", "output_dir", "tool_version", "commands"};
    for (const auto& [k, v] : m.items())
        if (!keys.count(k))
            throw SchemaError(source + ": unknown key \"" + k + "\"");
    const fs::path base(base_dir.empty() ? "." : base_dir);
    std::optional<std::string> pair;
    if (m.contains("pair")) {
        if (!m["pair"].is_string())
            throw SchemaError(source + ": pair must be a path");
        const fs::path p = base / m["pair"].get<std::string>();
        if (!fs::exists(p))
            throw SchemaError(source + ": pair file not found: " + p.string());
        pair = p.string();
    }
    std::optional<std::uint64_t> seed;
    if (m.contains("seed")) {
        if (!m["seed"].is_number_unsigned())
            throw SchemaError(source + ": seed must be a non-negative integer");
        seed = m["seed"].get<std::uint64_t>();
    }
    if (m.contains("output_dir") && !m["output_dir"].is_string())
        throw SchemaError(source + ": output_dir must be a path");
    if (m.contains("tool_version") && !m["tool_version"].is_string())
        throw SchemaError(source + ": tool_version must be a string");
    const fs::path out_dir = base / m.value("output_dir", std::string("qlab-run"));
    const nlohmann::json commands = m.value("commands", nlohmann::json::array());
    if (!commands.is_array())
        throw SchemaError(source + ": commands must be an array");

    std::set<std::string> ids;
    for (std::size_t i = 0; i < commands.size(); ++i) {
        const auto& c = commands[i];
        const std::string where = source + ": commands[" + std::to_string(i) + "]";
        if (!c.is_object() || !c.contains("id") || !c["id"].is_string() || c["id"].get<std::string>().empty())
            throw SchemaError(where + ": needs a non-empty string id");
        for (const auto& [k, v] : c.items())
            if (k != "id" && k != "argv")
                throw SchemaError(where + ": unknown key \"" + k + "\"");
        if (!c.contains("argv") || !c["argv"].is_array() || c["argv"].empty())
            throw SchemaError(where + ": needs a non-empty argv");
        for (const auto& a : c["argv"])
            if (!a.is_string())
                throw SchemaError(where + ": argv entries must be strings");
        if (!ids.insert(c["id"].get<std::string>()).second)
            throw SchemaError(where + ": duplicate id " + c["id"].get<std::string>());
    }

    RunReport report;
    if (commands.empty())
        return report;
    fs::create_directories(out_dir);
    for (const auto& c : commands) {
        const std::string id = c["id"];
        std::vector<std::string> args = c["argv"].get<std::vector<std::string>>();
        const std::string sub = args.front();
        if (pair && takes_pair(sub) && !has_flag(args, "--pair") && !(sub == "cylinder" && has_flag(args, "--audit"))) {
            args.push_back("--pair");
            args.push_back(*pair);
        }
        if (seed && takes_seed(sub) && !has_flag(args, "--seed")) {
            args.push_back("--seed");
            args.push_back(std::to_string(*seed));
        }
        CommandStatus st;
        st.id = id;
        for (std::size_t i = 0; i + 1 < args.size(); ++i) {
            const std::string& a = args[i];
            fs::path v(args[i + 1]);
            if (v.is_absolute())
                continue;
            if (a == "--out" || a == "--in") {
                args[i + 1] = (out_dir / v).string();
                if (a == "--out")
                    st.artifacts.push_back(args[i + 1]);
            } else if (a == "--pair" || a == "--cubes" || a == "--config" || a == "--manifest") {
                args[i + 1] = (base / v).string();
            }
        }
        std::ostringstream o, e;
        const auto t0 = std::chrono::steady_clock::now();
        const int code = run_command(args, o, e);
        st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        st.exit_code = code;
        const fs::path captured = out_dir / (id + ".out");
        {
            std::ofstream f(captured, std::ios::binary);
            f << o.str();
        }
        st.artifacts.insert(st.artifacts.begin(), captured.string());
        if (code == kExitError)
            throw CommandFailed(id + ": " + e.str());
        st.status = code == kExitOk ? "ok" : (sub == "check" || sub == "classify" ? "degenerate" : "fail");
        st.verdict = verdict_of(read_file(captured));
        if (sub == "suite") {
            std::string dir;
            for (std::size_t i = 0; i + 1 < args.size(); ++i)
                if (args[i] == "--out")
                    dir = args[i + 1];
            if (dir.empty())
                dir = "qlab-suite";
            const auto rep = nlohmann::json::parse(read_file(fs::path(dir) / "report.json"));
            for (const auto& v : rep.at("verdicts"))
                report.verdicts.push_back(verdict_from_json(v));
            report.non_certifying = report.non_certifying || rep.value("non_certifying", false);
        }
        report.commands.push_back(std::move(st));
    }
    std::ofstream(out_dir / "run_report.json", std::ios::binary) << to_json(report).dump(2) << "\n";
    return report;
}

RunReport run_manifest(const std::string& path)
{
    const std::string text = read_file(path);
    if (!fs::exists(path))
        throw SchemaError("cannot open manifest " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1;
        for (std::size_t i = 0; i < e.byte && i < text.size(); ++i)
            if (text[i] == '\n')
                ++line;
        throw SchemaError(path + ":" + std::to_string(line) + ": " + e.what());
    }
    return run_manifest(j, fs::path(path).parent_path().string(), path);
}

} // namespace qlab
