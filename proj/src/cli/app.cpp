#include "kernelselect/cli/app.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "kernelselect/cli/csv.hpp"
#include "kernelselect/cli/grammar.hpp"
#include "kernelselect/cme.hpp"
#include "kernelselect/feature_select.hpp"
#include "kernelselect/spectral_optimizer.hpp"
#include "kernelselect/stationary.hpp"

namespace ksel::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum class Kind { number, integer, string, boolean, numbers, strings, range };

const std::map<std::string, Kind>& common_keys() {
    static const std::map<std::string, Kind> k{{"alpha", Kind::number},     {"seed", Kind::integer},
                                               {"convention", Kind::string}, {"out", Kind::string},
                                               {"emit_plot", Kind::string},  {"oracle", Kind::boolean},
                                               {"compare", Kind::boolean}};
    return k;
}

const std::map<std::string, std::map<std::string, Kind>>& command_keys() {
    static const std::map<std::string, std::map<std::string, Kind>> k{
        {"optspec",
         {{"coefficients", Kind::string}, {"c", Kind::numbers}, {"oracle_step", Kind::number},
          {"multistart", Kind::integer}}},
        {"fit", {{"measure", Kind::string}, {"phi", Kind::string}, {"kernel", Kind::string}}},
        {"stationary",
         {{"kernel", Kind::string}, {"scale", Kind::number}, {"phi_hat", Kind::string}, {"cutoff", Kind::number},
          {"panels", Kind::integer}, {"table_xi", Kind::range}}},
        {"cme", {{"joint", Kind::string}, {"L", Kind::string}, {"family", Kind::strings}}},
        {"plot", {{"figure", Kind::string}, {"range", Kind::range}, {"c", Kind::number}, {"A", Kind::number}}},
    };
    return k;
}

[[noreturn]] void invalid(const std::string& msg) { throw IngestionError("config: " + msg); }

void check_kind(const std::string& key, const json& v, Kind kind) {
    const auto is_num = [](const json& x) { return x.is_number(); };
    switch (kind) {
        case Kind::number:
            if (!is_num(v)) invalid(fmt::format("'{}' must be a number", key));
            if (!std::isfinite(v.get<double>())) invalid(fmt::format("'{}' must be finite", key));
            return;
        case Kind::integer:
            if (!v.is_number_integer() || v.get<long long>() < 0) invalid(fmt::format("'{}' must be a nonnegative integer", key));
            return;
        case Kind::string:
            if (!v.is_string()) invalid(fmt::format("'{}' must be a string", key));
            return;
        case Kind::boolean:
            if (!v.is_boolean()) invalid(fmt::format("'{}' must be true or false", key));
            return;
        case Kind::numbers:
            if (!v.is_array() || !std::all_of(v.begin(), v.end(), is_num))
                invalid(fmt::format("'{}' must be an array of numbers", key));
            return;
        case Kind::strings:
            if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_string(); }))
                invalid(fmt::format("'{}' must be an array of strings", key));
            return;
        case Kind::range:
            if (!v.is_object()) invalid(fmt::format("'{}' must be an object with min, max, count", key));
            for (const auto& [k, x] : v.items()) {
                if (k != "min" && k != "max" && k != "count") invalid(fmt::format("'{}' has unknown key '{}'", key, k));
                if (!x.is_number()) invalid(fmt::format("'{}.{}' must be a number", key, k));
            }
            if (v.contains("count") && !v["count"].is_number_integer())
                invalid(fmt::format("'{}.count' must be an integer", key));
            return;
    }
}

void validate(const std::string& command, const json& values) {
    const auto cmd = command_keys().find(command);
    if (cmd == command_keys().end()) invalid("unknown command '" + command + "'");
    if (!values.is_object()) invalid("top level must be a JSON object");
    for (const auto& [key, v] : values.items()) {
        auto it = cmd->second.find(key);
        if (it != cmd->second.end()) {
            check_kind(key, v, it->second);
            continue;
        }
        auto jt = common_keys().find(key);
        if (jt == common_keys().end()) invalid(fmt::format("unknown key '{}' for command {}", key, command));
        check_kind(key, v, jt->second);
    }
    if (values.contains("alpha") && !(values["alpha"].get<double>() > 0)) invalid("'alpha' must be positive");
    if (values.contains("convention")) {
        try {
            parse_convention(values["convention"].get<std::string>());
        } catch (const ArgumentError& e) {
            invalid(e.what());
        }
    }
}

double get_alpha(const RunConfig& cfg) {
    if (!cfg.values.contains("alpha")) invalid("'alpha' is required for " + cfg.command);
    return cfg.values["alpha"].get<double>();
}

std::string need_string(const RunConfig& cfg, const std::string& key) {
    if (!cfg.values.contains(key)) invalid(fmt::format("'{}' is required for {}", key, cfg.command));
    return cfg.values[key].get<std::string>();
}

fs::path input_path(const RunConfig& cfg, const std::string& rel) {
    const fs::path p(rel);
    return p.is_absolute() ? p : cfg.base_dir / p;
}

struct Range {
    double min;
    double max;
    std::size_t count;
};

Range get_range(const RunConfig& cfg, const std::string& key, Range fallback) {
    Range r = fallback;
    if (cfg.values.contains(key)) {
        const json& v = cfg.values[key];
        if (v.contains("min")) r.min = v["min"].get<double>();
        if (v.contains("max")) r.max = v["max"].get<double>();
        if (v.contains("count")) {
            const long long c = v["count"].get<long long>();
            if (c < 0) invalid(fmt::format("'{}.count' must be nonnegative", key));
            r.count = static_cast<std::size_t>(c);
        }
    }
    if (!(r.max > r.min) || r.count < 2 || !std::isfinite(r.min) || !std::isfinite(r.max))
        invalid(fmt::format("'{}' is an empty range (need min < max and count >= 2)", key));
    return r;
}

std::vector<double> linspace(const Range& r) {
    std::vector<double> xs(r.count);
    for (std::size_t i = 0; i < r.count; ++i)
        xs[i] = r.min + (r.max - r.min) * static_cast<double>(i) / static_cast<double>(r.count - 1);
    return xs;
}

json complex_json(const CVector& v) {
    json re = json::array();
    json im = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        re.push_back(v[i].real());
        im.push_back(v[i].imag());
    }
    return json{{"re", re}, {"im", im}};
}

json vec_json(const RVector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string csv_line(std::initializer_list<double> xs) {
    std::string s;
    bool first = true;
    for (double x : xs) {
        if (!first) s += ',';
        s += format_double(x);
        first = false;
    }
    return s + "\n";
}

// ---- inputs ------------------------------------------------------------------

struct Inputs {
    std::vector<std::pair<std::string, std::string>> files;  // (config-relative name, bytes)

    std::string load(const RunConfig& cfg, const std::string& rel) {
        std::string bytes = read_file(input_path(cfg, rel));
        files.emplace_back(rel, bytes);
        return bytes;
    }
    CsvTable csv(const RunConfig& cfg, const std::string& rel) {
        return parse_csv(load(cfg, rel), input_path(cfg, rel).string());
    }
};

std::string digest(const RunConfig& cfg, const Inputs& in) {
    json canon = cfg.values;
    canon.erase("out");
    canon.erase("emit_plot");
    std::uint64_t h = fnv1a(cfg.command);
    h = fnv1a("\n", h);
    h = fnv1a(canon.dump(), h);
    for (const auto& [name, bytes] : in.files) {
        h = fnv1a("\n" + name + "\n", h);
        h = fnv1a(bytes, h);
    }
    return fmt::format("{:016x}", h);
}

KernelSpec kernel_from(const RunConfig& cfg, Inputs& in, const std::string& text,
                       std::shared_ptr<const DiscreteMeasure> measure = nullptr) {
    const KernelExpr e = parse_kernel(text);
    for (const auto& f : referenced_files(e)) in.load(cfg, f);
    return resolve_kernel(e, cfg.base_dir, std::move(measure));
}

// ---- optspec -----------------------------------------------------------------

CommandResult cmd_optspec(const RunConfig& cfg, Inputs& in) {
    const double alpha = get_alpha(cfg);
    std::vector<double> c;
    const bool has_file = cfg.values.contains("coefficients");
    const bool has_inline = cfg.values.contains("c");
    if (has_file == has_inline) invalid("optspec needs exactly one of 'coefficients' (CSV path) or 'c' (array)");
    if (has_file) {
        const CsvTable t = in.csv(cfg, cfg.values["coefficients"].get<std::string>());
        const std::size_t col = t.column("c");
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            if (t.rows[i][col] < 0)
                throw IngestionError(fmt::format("{}:{}: coefficient must be nonnegative", t.source, t.lines[i]));
            c.push_back(t.rows[i][col]);
        }
    } else {
        for (const auto& v : cfg.values["c"]) {
            if (v.get<double>() < 0 || !std::isfinite(v.get<double>())) invalid("'c' entries must be nonnegative");
            c.push_back(v.get<double>());
        }
    }
    if (c.empty()) throw IngestionError("optspec: no coefficients");
    double total = 0.0;
    for (double v : c) total += v;
    if (!(total > 0)) throw IngestionError("optspec: coefficients sum to zero");

    SolveOptions opts;
    opts.seed = cfg.values.value("seed", std::uint64_t{0});
    if (cfg.values.contains("multistart")) opts.multistart = cfg.values["multistart"].get<std::size_t>();
    const CoefficientProfile profile(c);
    const SpectrumSolution s = solve_spectrum(profile, alpha, opts);

    json r;
    r["alpha"] = alpha;
    r["n"] = c.size();
    r["lambda"] = s.lambda;
    r["A"] = s.A;
    r["objective"] = s.objective;
    r["objective_lagrangian_form"] = number_or_null(s.objective_lagrangian_form);
    r["kkt_residual"] = s.kkt_residual;
    r["certified_global"] = s.certified_global;
    r["method"] = s.method;
    if (cfg.values.value("oracle", false)) {
        const double step = cfg.values.value("oracle_step", 1e-4);
        const GridResult g = oracle_grid(profile, alpha, step);
        r["oracle"] = json{{"step", step},
                           {"lambda", g.lambda},
                           {"objective", g.objective},
                           {"gap", g.objective - s.objective}};
    }
    CommandResult out;
    out.document = r;
    std::string csv = "index,c,lambda\n";
    for (std::size_t i = 0; i < c.size(); ++i) csv += csv_line({static_cast<double>(i), c[i], s.lambda[i]});
    out.csv = csv;
    return out;
}

// ---- fit ---------------------------------------------------------------------

CommandResult cmd_fit(const RunConfig& cfg, Inputs& in) {
    const double alpha = get_alpha(cfg);
    const CsvTable mt = in.csv(cfg, need_string(cfg, "measure"));
    const std::size_t wcol = mt.column("w");
    if (mt.rows.empty()) throw IngestionError(mt.source + ": no atoms");
    std::vector<Point> atoms;
    std::vector<double> weights;
    for (std::size_t i = 0; i < mt.rows.size(); ++i) {
        std::vector<double> x;
        for (std::size_t k = 0; k < mt.header.size(); ++k)
            if (k != wcol) x.push_back(mt.rows[i][k]);
        if (x.empty()) throw IngestionError(mt.source + ": need at least one coordinate column");
        if (!(mt.rows[i][wcol] > 0)) throw IngestionError(fmt::format("{}:{}: weight must be positive", mt.source, mt.lines[i]));
        atoms.emplace_back(std::move(x));
        weights.push_back(mt.rows[i][wcol]);
    }
    // Duplicates are merged by the measure; phi must then agree on them.
    const auto measure = std::make_shared<const DiscreteMeasure>(atoms, weights);

    const CsvTable pt = in.csv(cfg, need_string(cfg, "phi"));
    const bool complex_phi = std::find(pt.header.begin(), pt.header.end(), "phi_re") != pt.header.end();
    const std::size_t re_col = complex_phi ? pt.column("phi_re") : pt.column("phi");
    const std::optional<std::size_t> im_col = complex_phi ? std::optional(pt.column("phi_im")) : std::nullopt;
    if (pt.rows.size() != atoms.size())
        throw IngestionError(fmt::format("{}: {} values for {} atoms", pt.source, pt.rows.size(), atoms.size()));
    CVector phi_values = CVector::Zero(static_cast<Eigen::Index>(measure->size()));
    std::vector<bool> seen(measure->size(), false);
    for (std::size_t i = 0; i < pt.rows.size(); ++i) {
        const Complex v(pt.rows[i][re_col], im_col ? pt.rows[i][*im_col] : 0.0);
        const std::size_t k = *measure->index_of(atoms[i]);
        if (seen[k] && phi_values[static_cast<Eigen::Index>(k)] != v)
            throw IngestionError(fmt::format("{}:{}: duplicate atom with a different phi value", pt.source, pt.lines[i]));
        seen[k] = true;
        phi_values[static_cast<Eigen::Index>(k)] = v;
    }
    const L2Function phi(measure, phi_values);

    const std::string ktext = need_string(cfg, "kernel");
    const KernelSpec kernel = kernel_from(cfg, in, ktext, measure);
    const EmbeddingOperator op(kernel, measure);
    const FeatureSolution s = fit(op, phi, alpha);

    json r;
    r["alpha"] = alpha;
    r["kernel"] = print_kernel(parse_kernel(ktext));
    r["n_atoms"] = measure->size();
    r["coeffs"] = complex_json(s.coeffs);
    r["span_coeffs"] = complex_json(s.span_coeffs(op));
    r["rkhs_norm_sq"] = s.rkhs_norm_sq;
    r["ambient_norm_sq"] = s.ambient_norm_sq;
    r["residual_norm_sq"] = s.residual_norm_sq;
    r["phi_norm_sq"] = phi.norm_sq();
    r["approximation_error"] = approximation_error(s);
    const SpectralProfile prof = spectral_profile(op, phi);
    if (cfg.values.value("compare", false)) {
        const CriteriaReport cr = compare_criteria(op, phi, alpha);
        r["compare"] = json{{"rkhs_value", cr.rkhs_value},
                            {"ambient_value", cr.ambient_value},
                            {"fitted_norm_sq", cr.fitted_norm_sq},
                            {"spectral_rkhs", rkhs_norm_sq(prof, alpha)},
                            {"spectral_ambient", ambient_norm_sq(prof, alpha)}};
    }
    CommandResult out;
    out.document = r;
    std::string csv = "eigenvalue,mass,rkhs_term,ambient_term\n";
    for (Eigen::Index j = 0; j < prof.eigenvalues.size(); ++j) {
        const double x = prof.eigenvalues[j];
        const double m = prof.masses[j];
        csv += csv_line({x, m, x / ((alpha + x) * (alpha + x)) * m, x / (alpha + x) * m});
    }
    out.csv = csv;
    return out;
}

// ---- stationary --------------------------------------------------------------

json trace_json(const GrowthTrace& t) { return json{{"cutoffs", t.cutoffs}, {"values", t.values}}; }

CommandResult cmd_stationary(const RunConfig& cfg, Inputs& in) {
    const double alpha = get_alpha(cfg);
    const std::string name = need_string(cfg, "kernel");
    if (name != "laplace" && name != "gauss") throw IngestionError("unknown stationary kernel '" + name + "' (expected laplace or gauss)");
    const double scale = cfg.values.value("scale", 1.0);
    if (!(scale > 0)) invalid("'scale' must be positive");
    const Convention conv = parse_convention(cfg.values.value("convention", std::string("probability")));
    const StationaryKernel kernel = builtin_kernel(name, scale);

    json r;
    r["kernel"] = name;
    r["scale"] = scale;
    r["alpha"] = alpha;
    r["convention"] = to_string(conv);

    const Range tr = get_range(cfg, "table_xi", Range{-5.0, 5.0, 101});
    const std::vector<double> xi = linspace(tr);
    // Table columns use the unit-scale built-ins, as printed.
    const Table1Columns t = table1_columns(name, alpha, xi, conv);
    r["table1"] = json{{"xi", t.xi}, {"g_hat", t.g_hat}, {"ratio_sq", t.ratio_sq}, {"ratio", t.ratio}};

    const std::string phi_name = cfg.values.value("phi_hat", std::string("gauss"));
    FrequencyGrid grid;
    std::function<Complex(double)> phi_hat;
    std::vector<double> sample_xi;
    std::vector<Complex> sample_v;
    if (phi_name == "gauss") {
        phi_hat = [](double x) { return Complex(std::exp(-0.5 * x * x), 0.0); };
    } else if (phi_name == "box") {
        phi_hat = [](double x) { return Complex(x == 0.0 ? 2.0 : 2.0 * std::sin(x) / x, 0.0); };
    } else {
        const CsvTable st = in.csv(cfg, phi_name);
        const std::size_t xc = st.column("xi");
        const bool cplx = std::find(st.header.begin(), st.header.end(), "re") != st.header.end();
        const std::size_t rc = cplx ? st.column("re") : st.column("phi_hat");
        const std::optional<std::size_t> ic = cplx ? std::optional(st.column("im")) : std::nullopt;
        if (st.rows.size() < 2) throw IngestionError(st.source + ": need at least two samples");
        for (std::size_t i = 0; i < st.rows.size(); ++i) {
            if (i > 0 && !(st.rows[i][xc] > sample_xi.back()))
                throw IngestionError(fmt::format("{}:{}: xi must be strictly increasing", st.source, st.lines[i]));
            sample_xi.push_back(st.rows[i][xc]);
            sample_v.emplace_back(st.rows[i][rc], ic ? st.rows[i][*ic] : 0.0);
        }
    }
    if (sample_xi.empty()) {
        const double cutoff = cfg.values.value("cutoff", 50.0);
        const std::size_t panels = cfg.values.value("panels", std::size_t{200});
        if (!(cutoff > 0) || panels < 1) invalid("'cutoff' and 'panels' must be positive");
        grid = FrequencyGrid::composite_gauss_legendre(cutoff, panels);
    } else {
        // Trapezoid rule on the supplied samples.
        const std::size_t n = sample_xi.size();
        grid.nodes = sample_xi;
        grid.weights.assign(n, 0.0);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double h = sample_xi[i + 1] - sample_xi[i];
            grid.weights[i] += 0.5 * h;
            grid.weights[i + 1] += 0.5 * h;
        }
        grid.cutoff = std::min(-sample_xi.front(), sample_xi.back());
        if (!(grid.cutoff > 0)) grid.cutoff = std::max(std::abs(sample_xi.front()), std::abs(sample_xi.back()));
        phi_hat = [&](double x) {
            const auto it = std::lower_bound(sample_xi.begin(), sample_xi.end(), x);
            return sample_v[static_cast<std::size_t>(it - sample_xi.begin())];
        };
    }
    const FeatureNorms fn = spectral_feature_norms(kernel, phi_hat, alpha, grid, conv);
    r["features"] = json{{"phi_hat", phi_name},
                         {"rkhs", fn.rkhs},
                         {"ambient", fn.ambient},
                         {"identity_deviation", fn.identity_deviation},
                         {"tail_mass", fn.tail_mass},
                         {"nodes", grid.size()},
                         {"cutoff", grid.cutoff}};

    const MembershipReport delta = convolution_membership(kernel, SignedAtomicMeasure{{0.0}, {Complex(1.0, 0.0)}});
    const MembershipReport deriv = derivative_membership(kernel);
    r["membership"] = json{
        {"delta", json{{"member", delta.member}, {"norm_sq", delta.value}}},
        {"derivative",
         json{{"member", deriv.member},
              {"second_moment", deriv.member ? json(deriv.value) : json(nullptr)},
              {"divergent", !deriv.member},
              {"trace", trace_json(deriv.trace)}}},
    };

    CommandResult out;
    out.document = r;
    std::string csv = "xi,g_hat,ratio_sq,ratio\n";
    for (std::size_t i = 0; i < t.xi.size(); ++i) csv += csv_line({t.xi[i], t.g_hat[i], t.ratio_sq[i], t.ratio[i]});
    out.csv = csv;
    return out;
}

// ---- cme ---------------------------------------------------------------------

JointDistribution read_joint(const CsvTable& t) {
    if (t.header.size() < 2) throw IngestionError(t.source + ": need an x column and at least one y column");
    std::vector<Point> ys;
    for (std::size_t k = 1; k < t.header.size(); ++k) {
        double v = 0.0;
        try {
            const CsvTable h = parse_csv("v\n" + t.header[k] + "\n", t.source);
            v = h.rows.at(0).at(0);
        } catch (const IngestionError&) {
            throw IngestionError(fmt::format("{}: y-state label '{}' is not a number", t.source, t.header[k]));
        }
        ys.emplace_back(std::vector<double>{v});
    }
    std::vector<Point> xs;
    RMatrix p(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(ys.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        xs.emplace_back(std::vector<double>{t.rows[i][0]});
        for (std::size_t k = 1; k < t.header.size(); ++k) {
            if (t.rows[i][k] < 0)
                throw IngestionError(fmt::format("{}:{}: negative probability", t.source, t.lines[i]));
            p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k - 1)) = t.rows[i][k];
        }
    }
    if (xs.empty()) throw IngestionError(t.source + ": no x rows");
    const double total = p.sum();
    if (std::abs(total - 1.0) > 1e-9)
        throw IngestionError(fmt::format("{}: probabilities sum to {}, not 1", t.source, format_double(total)));
    p /= total;
    try {
        return JointDistribution(std::move(xs), std::move(ys), std::move(p));
    } catch (const ArgumentError& e) {
        throw IngestionError(t.source + ": " + e.what());
    }
}

CommandResult cmd_cme(const RunConfig& cfg, Inputs& in) {
    const JointDistribution joint = read_joint(in.csv(cfg, need_string(cfg, "joint")));
    const std::string ltext = need_string(cfg, "L");
    const KernelSpec L = kernel_from(cfg, in, ltext);
    const CMatrix lg = gram(L, joint.y_states()).entries;
    const RVector mx = joint.x_marginal();
    const RVector my = joint.y_marginal();

    json r;
    r["L"] = print_kernel(parse_kernel(ltext));
    json xs = json::array();
    for (const auto& p : joint.x_states()) xs.push_back(p[0]);
    json ys = json::array();
    for (const auto& p : joint.y_states()) ys.push_back(p[0]);
    r["x_states"] = xs;
    r["y_states"] = ys;

    json emb = json::array();
    std::string csv = "x,norm_sq\n";
    const CVector ones = CVector::Ones(lg.rows());
    double lhs = 0.0;
    for (std::size_t i = 0; i < joint.x_states().size(); ++i) {
        if (!(mx[static_cast<Eigen::Index>(i)] > 0)) continue;
        const Embedding e = embed(joint, lg, i);
        emb.push_back(json{{"x", joint.x_states()[i][0]}, {"coeffs", vec_json(e.coeffs)}, {"norm_sq", e.norm_sq}});
        csv += csv_line({joint.x_states()[i][0], e.norm_sq});
        lhs += mx[static_cast<Eigen::Index>(i)] * e.inner(lg, ones).real();
    }
    r["embeddings"] = emb;
    const FinitenessReport fr = finiteness_report(joint, L);
    r["finiteness"] = json{{"x_indices", fr.x_indices}, {"per_x", fr.per_x}, {"integrated", fr.integrated}};
    // E[f(Y)] for f = sum_j L(., y_j), once through the embeddings and once directly.
    const CVector f_at_y = lg * ones;
    double rhs = 0.0;
    for (Eigen::Index j = 0; j < my.size(); ++j) rhs += my[j] * f_at_y[j].real();
    r["total_expectation"] = json{{"via_embeddings", lhs}, {"direct", rhs}, {"deviation", std::abs(lhs - rhs)}};

    if (cfg.values.contains("family")) {
        const double alpha = get_alpha(cfg);
        std::vector<OperatorValuedKernel> family;
        json names = json::array();
        for (const auto& s : cfg.values["family"]) {
            const std::string text = s.get<std::string>();
            family.push_back(OperatorValuedKernel::tensor(kernel_from(cfg, in, text)));
            names.push_back(print_kernel(parse_kernel(text)));
        }
        if (family.empty()) invalid("'family' is empty");
        json fits = json::array();
        std::size_t best = 0;
        std::vector<double> norms;
        for (std::size_t k = 0; k < family.size(); ++k) {
            const CmeSolution s = cme_fit(joint, L, family[k], alpha);
            fits.push_back(json{{"S", "tensor:" + names[k].get<std::string>()},
                                {"rkhs_norm_sq", s.rkhs_norm_sq},
                                {"residual_norm_sq", s.residual_norm_sq},
                                {"objective", s.objective},
                                {"rank", s.rank},
                                {"rank_deficient", s.rank_deficient}});
            norms.push_back(s.rkhs_norm_sq);
            if (norms[k] > norms[best]) best = k;
        }
        r["alpha"] = alpha;
        r["family"] = fits;
        r["argmax"] = best;
    }
    CommandResult out;
    out.document = r;
    out.csv = csv;
    return out;
}

// ---- plot --------------------------------------------------------------------

CommandResult cmd_plot(const RunConfig& cfg) {
    const double alpha = get_alpha(cfg);
    const std::string figure = need_string(cfg, "figure");
    CommandResult out;
    std::string csv;
    if (figure == "figure1") {
        const Range rg = get_range(cfg, "range", Range{0.0, 3.0 * alpha, 301});
        csv = "x,y\n";
        for (double x : linspace(rg)) csv += csv_line({x, x / ((alpha + x) * (alpha + x))});
    } else if (figure == "figure2") {
        if (!cfg.values.contains("c") || !cfg.values.contains("A")) invalid("figure2 needs 'c' and 'A'");
        const double c = cfg.values["c"].get<double>();
        const double A = cfg.values["A"].get<double>();
        if (!(c > 0) || !(A > 0)) invalid("figure2 needs positive 'c' and 'A'");
        const Range rg = get_range(cfg, "range", Range{0.0, alpha, 101});
        const double root = solve_inner(c, alpha, A);
        const bool crosses = root > 0;
        csv = fmt::format("# intersection lambda={}\n", crosses ? format_double(root) : std::string("none"));
        csv += "lambda,lhs,rhs,intersection\n";
        const auto row = [&](double l, double mark) {
            const double d = alpha + l;
            return csv_line({l, (alpha - l) * c, A * d * d * d, mark});
        };
        bool placed = !crosses;
        for (double l : linspace(rg)) {
            if (!placed && root <= l) {
                csv += row(root, 1.0);
                placed = true;
                if (root == l) continue;
            }
            csv += row(l, 0.0);
        }
        if (!placed) csv += row(root, 1.0);
    } else {
        invalid("'figure' must be figure1 or figure2");
    }
    out.csv = csv;
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream o(path, std::ios::binary);
    if (!o) throw IngestionError("cannot write '" + path.string() + "'");
    o << text;
    if (!o) throw IngestionError("failed writing '" + path.string() + "'");
}

void init_logging() {
    static bool done = false;
    if (done) return;
    done = true;
    auto logger = spdlog::stderr_logger_st("kernelselect");
    spdlog::set_default_logger(logger);
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("KERNELSELECT_LOG")) level = spdlog::level::from_str(env);
    spdlog::set_level(level);
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

RunConfig make_config(const std::string& command, json values, const fs::path& base_dir, const Overrides& o) {
    if (values.is_null()) values = json::object();
    validate(command, values);
    if (o.alpha) values["alpha"] = *o.alpha;
    if (o.seed) values["seed"] = *o.seed;
    if (o.oracle) values["oracle"] = true;
    if (o.compare) values["compare"] = true;
    if (o.convention) values["convention"] = *o.convention;
    if (o.out) values["out"] = *o.out;
    if (o.emit_plot) values["emit_plot"] = *o.emit_plot;
    validate(command, values);
    return RunConfig{command, std::move(values), base_dir};
}

RunConfig load_config(const std::string& command, const std::optional<fs::path>& config_path, const Overrides& o) {
    json values = json::object();
    fs::path base = fs::current_path();
    if (config_path) {
        const std::string text = read_file(*config_path);
        try {
            values = json::parse(text);
        } catch (const json::parse_error& e) {
            throw IngestionError(fmt::format("{}: invalid JSON: {}", config_path->string(), e.what()));
        }
        base = fs::absolute(*config_path).parent_path();
    }
    return make_config(command, std::move(values), base, o);
}

CommandResult execute(const RunConfig& cfg) {
    spdlog::info("running {}", cfg.command);
    Inputs in;
    CommandResult res;
    if (cfg.command == "optspec")
        res = cmd_optspec(cfg, in);
    else if (cfg.command == "fit")
        res = cmd_fit(cfg, in);
    else if (cfg.command == "stationary")
        res = cmd_stationary(cfg, in);
    else if (cfg.command == "cme")
        res = cmd_cme(cfg, in);
    else if (cfg.command == "plot")
        return cmd_plot(cfg);
    else
        invalid("unknown command '" + cfg.command + "'");
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["command"] = cfg.command;
    doc["inputs_digest"] = digest(cfg, in);
    doc["results"] = std::move(res.document);
    res.document = std::move(doc);
    return res;
}

std::string render(const json& document) { return document.dump(2) + "\n"; }

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const IngestionError*>(&e) || dynamic_cast<const ArgumentError*>(&e) ||
        dynamic_cast<const DomainError*>(&e))
        return 2;
    if (dynamic_cast<const NumericError*>(&e)) return 3;
    if (dynamic_cast<const CapabilityError*>(&e)) return 4;
    return 1;
}

int run(int argc, char** argv) {
    init_logging();
    CLI::App app{"Optimal regularized feature selection in reproducing kernel Hilbert spaces"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::string> config;
    Overrides o;
    std::optional<std::string> convention;
    app.add_option("--config", config, "JSON run configuration");
    app.add_option("--alpha", o.alpha, "regularization parameter");
    app.add_option("--seed", o.seed, "random seed");
    app.add_flag("--oracle", o.oracle, "compare with the grid oracle (optspec)");
    app.add_flag("--compare", o.compare, "report both criteria (fit)");
    app.add_option("--convention", convention, "paper-table or probability")
        ->check(CLI::IsMember({"paper-table", "probability"}));
    app.add_option("--out", o.out, "result path (default stdout)");
    app.add_option("--emit-plot", o.emit_plot, "plot-data CSV path");
    for (const char* name : {"optspec", "fit", "stationary", "cme", "plot"}) app.add_subcommand(name);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    o.convention = convention;
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        const RunConfig cfg = load_config(command, config ? std::optional<fs::path>(*config) : std::nullopt, o);
        const CommandResult res = execute(cfg);
        const std::string out_path = cfg.values.value("out", std::string());
        const std::string plot_path = cfg.values.value("emit_plot", std::string());
        const std::string main_text = command == "plot" ? res.csv.value_or("") : render(res.document);
        if (out_path.empty())
            std::cout << main_text;
        else
            write_text(out_path, main_text);
        if (!plot_path.empty() && res.csv) write_text(plot_path, *res.csv);
        return 0;
    } catch (const std::exception& e) {
        const int code = exit_code_for(e);
        spdlog::debug("failed with exit code {}", code);
        std::cerr << "kernelselect: " << e.what() << "\n";
        return code;
    }
}

}  // namespace ksel::cli
