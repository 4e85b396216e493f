#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "kernelselect/cli/app.hpp"
#include "kernelselect/cli/csv.hpp"
#include "kernelselect/cli/grammar.hpp"
#include "kernelselect/feature_select.hpp"
#include "tool_runner.hpp"

using namespace ksel;
using namespace ksel::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path fixtures = KSEL_FIXTURES;
const std::string tool = KSEL_CLI;

CommandResult run_fixture(const std::string& command, const std::string& config, Overrides o = {}) {
    return execute(load_config(command, fixtures / config, o));
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

// Same structure and strings, numbers within tol.
bool json_close(const json& a, const json& b, double tol, std::string& where) {
    if (a.is_number() && b.is_number()) {
        if (close(a.get<double>(), b.get<double>(), tol)) return true;
        where += " " + a.dump() + " vs " + b.dump();
        return false;
    }
    if (a.type() != b.type()) {
        where += " type";
        return false;
    }
    if (a.is_object()) {
        if (a.size() != b.size()) {
            where += " keys";
            return false;
        }
        for (const auto& [k, v] : a.items()) {
            if (!b.contains(k)) {
                where += " missing " + k;
                return false;
            }
            where += "." + k;
            if (!json_close(v, b[k], tol, where)) return false;
            where.resize(where.size() - k.size() - 1);
        }
        return true;
    }
    if (a.is_array()) {
        if (a.size() != b.size()) {
            where += " length";
            return false;
        }
        for (std::size_t i = 0; i < a.size(); ++i)
            if (!json_close(a[i], b[i], tol, where)) return false;
        return true;
    }
    return a == b;
}

bool csv_close(const std::string& a, const std::string& b, double tol) {
    std::istringstream sa(a), sb(b);
    std::string la, lb;
    while (true) {
        const bool ga = static_cast<bool>(std::getline(sa, la));
        const bool gb = static_cast<bool>(std::getline(sb, lb));
        if (ga != gb) return false;
        if (!ga) return true;
        if (la == lb) continue;
        if (la.empty() || la[0] == '#') return false;
        std::istringstream fa(la), fb(lb);
        std::string xa, xb;
        while (std::getline(fa, xa, ',')) {
            if (!std::getline(fb, xb, ',')) return false;
            if (!close(std::stod(xa), std::stod(xb), tol)) return false;
        }
        if (std::getline(fb, xb, ',')) return false;
    }
}

// Frozen outputs of the tool; KSEL_UPDATE_GOLDENS=1 rewrites them.
void check_golden(const std::string& name, const std::string& text, bool is_json) {
    const fs::path path = fixtures / "golden" / name;
    if (std::getenv("KSEL_UPDATE_GOLDENS")) {
        fs::create_directories(path.parent_path());
        std::ofstream(path, std::ios::binary) << text;
    }
    REQUIRE_MESSAGE(fs::exists(path), path.string());
    const std::string want = tooltest::slurp(path);
    if (text == want) return;
    if (is_json) {
        std::string where;
        CHECK_MESSAGE(json_close(json::parse(text), json::parse(want), 1e-12, where), name << where);
    } else {
        CHECK_MESSAGE(csv_close(text, want, 1e-12), name);
    }
}

}  // namespace

TEST_CASE("kernel grammar parses and prints canonical forms") {
    const KernelExpr e = parse_kernel("  gauss ( scale = 1.5 ) ");
    CHECK(e.name == "gauss");
    REQUIRE(e.args.size() == 1);
    CHECK(e.args[0].key == "scale");
    CHECK(std::get<double>(e.args[0].value) == 1.5);
    CHECK(print_kernel(e) == "gauss(scale=1.5)");

    for (const std::string canon : {"gauss(scale=1)", "laplace(scale=0.1)", "constant(value=2.5)", "gram(@g.csv)",
                                    "spectral(lambdas=[0.5, 0.25, 0.25], basis=@basis.csv)", "spectral(lambdas=[])",
                                    "constant(value=-1e-300)", "gauss()"}) {
        CHECK(print_kernel(parse_kernel(canon)) == canon);
        CHECK(parse_kernel(print_kernel(parse_kernel(canon))) == parse_kernel(canon));
    }
    CHECK(referenced_files(parse_kernel("spectral(lambdas=[1], basis=@b.csv)")) == std::vector<std::string>{"b.csv"});
}

TEST_CASE("kernel grammar errors carry positions") {
    const auto pos = [](const std::string& s) -> std::size_t {
        try {
            parse_kernel(s);
        } catch (const GrammarError& e) {
            return e.position();
        }
        return std::string::npos;
    };
    CHECK(pos("gauss(scale=1") == 13);
    CHECK(pos("gauss scale=1)") == 6);
    CHECK(pos("(scale=1)") == 0);
    CHECK(pos("gauss(scale=abc)") == 12);
    CHECK(pos("gauss(scale 1)") == 12);
    CHECK(pos("gauss(scale=1) x") == 15);
    CHECK(pos("spectral(lambdas=[1, 2)") == 22);
    CHECK(pos("gram(@)") == 6);
    CHECK(pos("gauss(scale=inf)") == 12);
    CHECK_THROWS_AS(parse_kernel("gauss(scale=1"), IngestionError);
}

TEST_CASE("kernel resolution") {
    CHECK(resolve_kernel(parse_kernel("gauss(scale=2)"), ".").eval(Point{0.0}, Point{2.0}).real() ==
          doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(resolve_kernel(parse_kernel("laplace()"), ".").eval(Point{0.0}, Point{1.0}).real() ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK_THROWS_AS(resolve_kernel(parse_kernel("matern(nu=1)"), "."), IngestionError);
    CHECK_THROWS_AS(resolve_kernel(parse_kernel("gauss(width=1)"), "."), IngestionError);
    CHECK_THROWS_AS(resolve_kernel(parse_kernel("gauss(scale=-1)"), "."), IngestionError);
    CHECK_THROWS_AS(resolve_kernel(parse_kernel("gram(@nope.csv)"), fixtures), IngestionError);
}

TEST_CASE("csv dialect") {
    const CsvTable t = parse_csv("# comment\n\nx, w\n1,2\n# mid\n+3,-4.5e1\n", "t.csv");
    CHECK(t.header == std::vector<std::string>{"x", "w"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1] == std::vector<double>{3.0, -45.0});
    CHECK(t.lines == std::vector<std::size_t>{4, 6});
    CHECK(t.column("w") == 1);

    const auto message = [](const std::string& text) -> std::string {
        try {
            parse_csv(text, "f.csv");
        } catch (const IngestionError& e) {
            return e.what();
        }
        return "";
    };
    CHECK(message("a,b\n1,2\n3\n") == "f.csv:3: expected 2 fields, found 1");
    CHECK(message("a\n1\nx\n") == "f.csv:3: not a number: 'x'");
    CHECK(message("a\n1\n1,5\n") == "f.csv:3: expected 1 fields, found 2");
    CHECK(message("a\n1,0\n").find("f.csv:2:") == 0);
    CHECK(message("a\ninf\n") == "f.csv:2: non-finite value 'inf'");
    CHECK(message("# only\n") == "f.csv: no header line");
    CHECK(message("a,,b\n") == "f.csv:1: empty column name in header");
    CHECK_THROWS_AS(parse_csv("a\n1\n", "f").column("b"), IngestionError);

    for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.0, -2.5, 0.0})
        CHECK(std::stod(format_double(v)) == v);
    CHECK(format_double(0.25) == "0.25");
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(make_config("fit", json{{"alpha", 1.0}, {"colour", "red"}}, ".", {}), IngestionError);
    CHECK_THROWS_AS(make_config("fit", json{{"alpha", "1"}}, ".", {}), IngestionError);
    CHECK_THROWS_AS(make_config("fit", json{{"alpha", 0.0}}, ".", {}), IngestionError);
    CHECK_THROWS_AS(make_config("optspec", json{{"seed", -1}}, ".", {}), IngestionError);
    CHECK_THROWS_AS(make_config("optspec", json{{"c", json::array({1, "x"})}}, ".", {}), IngestionError);
    CHECK_THROWS_AS(make_config("plot", json{{"range", json{{"lo", 1}}}}, ".", {}), IngestionError);
    CHECK_THROWS_AS(make_config("stationary", json{{"convention", "physics"}}, ".", {}), IngestionError);
    CHECK_THROWS_AS(make_config("train", json::object(), ".", {}), IngestionError);
    CHECK_THROWS_AS(make_config("fit", json::array(), ".", {}), IngestionError);

    Overrides o;
    o.alpha = 0.5;
    o.seed = 9;
    o.oracle = true;
    const RunConfig c = make_config("optspec", json{{"alpha", 2.0}, {"c", {1.0}}}, ".", o);
    CHECK(c.values["alpha"] == 0.5);
    CHECK(c.values["seed"] == 9);
    CHECK(c.values["oracle"] == true);
    o.alpha = -1.0;
    CHECK_THROWS_AS(make_config("optspec", json{{"c", {1.0}}}, ".", o), IngestionError);
}

TEST_CASE("exit code contract") {
    CHECK(exit_code_for(IngestionError("x")) == 2);
    CHECK(exit_code_for(ArgumentError("x")) == 2);
    CHECK(exit_code_for(DomainError("x")) == 2);
    CHECK(exit_code_for(NumericError("x")) == 3);
    CHECK(exit_code_for(CapabilityError("x")) == 4);
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("optspec command") {
    const json one = run_fixture("optspec", "optspec/one.json").document;
    CHECK(one["schema_version"] == 1);
    CHECK(one["command"] == "optspec");
    CHECK(one["results"]["lambda"] == json::array({1.0}));

    const json sym = run_fixture("optspec", "optspec/symmetric.json").document["results"];
    CHECK(sym["lambda"][0].get<double>() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sym["lambda"][0].get<double>() == sym["lambda"][1].get<double>());

    const json r = run_fixture("optspec", "optspec/config.json").document["results"];
    CHECK(r["n"] == 3);
    CHECK(std::abs(r["oracle"]["gap"].get<double>()) <= 1e-6);
    CHECK(r["kkt_residual"].get<double>() <= 1e-8);
    double total = 0;
    for (const auto& l : r["lambda"]) total += l.get<double>();
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(execute(make_config("optspec", json{{"alpha", 1.0}}, ".", {})), IngestionError);
    CHECK_THROWS_AS(execute(make_config("optspec", json{{"alpha", 1.0}, {"c", {0.0, 0.0}}}, ".", {})), IngestionError);
    CHECK_THROWS_AS(execute(make_config("optspec", json{{"alpha", 1.0}, {"c", {-1.0, 2.0}}}, ".", {})), IngestionError);
}

TEST_CASE("fit command") {
    const json d = run_fixture("fit", "fit_dirac/config.json").document["results"];
    CHECK(d["rkhs_norm_sq"].get<double>() == doctest::Approx(0.25).epsilon(1e-14));

    const json z = run_fixture("fit", "fit_dirac/zero.json").document["results"];
    CHECK(z["rkhs_norm_sq"] == 0.0);
    for (const auto& v : z["span_coeffs"]["re"]) CHECK(v == 0.0);

    // Five-atom fixture against the high-precision normal-equations golden.
    const json r = run_fixture("fit", "fit5/config.json").document["results"];
    const json g = json::parse(tooltest::slurp(fixtures / "fit5" / "golden.json"));
    for (const char* part : {"re", "im"})
        for (std::size_t i = 0; i < 5; ++i)
            CHECK(close(r["span_coeffs"][part][i].get<double>(), g["span_coeffs"][part][i].get<double>(), 1e-10));
    for (const char* key : {"rkhs_norm_sq", "ambient_norm_sq", "residual_norm_sq"})
        CHECK(close(r[key].get<double>(), g[key].get<double>(), 1e-10));
    CHECK(close(r["compare"]["spectral_rkhs"].get<double>(), g["rkhs_norm_sq"].get<double>(), 1e-10));
    CHECK(r["ambient_norm_sq"].get<double>() <= r["phi_norm_sq"].get<double>());
}

TEST_CASE("stationary command") {
    const json g = run_fixture("stationary", "stationary/gauss.json").document["results"];
    CHECK(g["membership"]["derivative"]["member"] == true);
    CHECK(std::abs(g["membership"]["derivative"]["second_moment"].get<double>() - 1.0) <= 1e-6);
    CHECK(g["convention"] == "paper-table");

    const json l = run_fixture("stationary", "stationary/laplace.json").document["results"];
    CHECK(l["membership"]["derivative"]["divergent"] == true);
    const json& trace = l["membership"]["derivative"]["trace"]["values"];
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i].get<double>() > trace[i - 1].get<double>());
    // xi = 0 sits in the middle of the 9-point table.
    CHECK(l["table1"]["xi"][4] == 0.0);
    CHECK(l["table1"]["ratio"][4].get<double>() == doctest::Approx(1.0 / 1.5).epsilon(1e-15));

    const json s = run_fixture("stationary", "stationary/sampled.json").document["results"];
    CHECK(s["features"]["nodes"] == 161);

    Overrides o;
    o.convention = "probability";
    CHECK(run_fixture("stationary", "stationary/gauss.json", o).document["results"]["convention"] == "probability");
}

TEST_CASE("cme command") {
    const json u = run_fixture("cme", "cme/uniform.json").document["results"];
    for (const auto& e : u["embeddings"]) CHECK(e["coeffs"] == json::array({0.5, 0.5}));
    const json d = run_fixture("cme", "cme/diag.json").document["results"];
    CHECK(d["embeddings"][0]["coeffs"] == json::array({1.0, 0.0}));
    CHECK(d["embeddings"][1]["coeffs"] == json::array({0.0, 1.0}));

    const json r = run_fixture("cme", "cme/config.json").document["results"];
    CHECK(r["total_expectation"]["deviation"].get<double>() <= 1e-12);
    REQUIRE(r["family"].size() == 3);
    std::size_t best = 0;
    for (std::size_t k = 0; k < 3; ++k)
        if (r["family"][k]["rkhs_norm_sq"].get<double>() > r["family"][best]["rkhs_norm_sq"].get<double>()) best = k;
    CHECK(r["argmax"] == best);
    CHECK_THROWS_AS(run_fixture("cme", "malformed/joint_sum.json"), IngestionError);
}

TEST_CASE("plot command") {
    const std::string f1 = *run_fixture("plot", "plot/figure1.json").csv;
    CHECK(f1.find("\n1,0.25\n") != std::string::npos);
    const CsvTable t = parse_csv(f1, "figure1");
    for (std::size_t i = 1; i < t.rows.size() && t.rows[i][0] <= 1.0; ++i) CHECK(t.rows[i][1] > t.rows[i - 1][1]);

    const std::string f2 = *run_fixture("plot", "plot/figure2.json").csv;
    CHECK(f2.rfind("# intersection lambda=0.5\n", 0) == 0);
    CHECK(f2.find("\n0.5,0.5,0.5,1\n") != std::string::npos);
    CHECK(run_fixture("plot", "plot/figure1.json").document.is_null());
}

TEST_CASE("malformed inputs exit with code 2") {
    const std::vector<std::pair<std::string, std::string>> cases{
        {"cme", "joint_sum"},       {"optspec", "bad_number"},     {"optspec", "unknown_key"},
        {"optspec", "negative_alpha"}, {"optspec", "broken"},      {"fit", "length_mismatch"},
        {"fit", "bad_kernel"},      {"stationary", "unknown_stationary"}, {"plot", "empty_range"},
        {"fit", "missing_column"},  {"optspec", "ragged"},         {"optspec", "missing_file"}};
    for (const auto& [cmd, name] : cases) {
        const auto o = tooltest::run_tool(tool, cmd + " --config " + tooltest::quote((fixtures / "malformed" / (name + ".json")).string()));
        CHECK_MESSAGE(o.exit_code == 2, name << ": " << o.err);
        CHECK(o.out.empty());
        CHECK(o.err.rfind("kernelselect: ", 0) == 0);
    }
    CHECK(tooltest::run_tool(tool, "").exit_code == 2);
    CHECK(tooltest::run_tool(tool, "fit --alpha nope").exit_code == 2);
    CHECK(tooltest::run_tool(tool, "plot --convention weird").exit_code == 2);
}

TEST_CASE("outputs are byte-stable and match frozen goldens") {
    const std::vector<std::tuple<std::string, std::string, std::string>> runs{
        {"optspec", "optspec/config.json", "optspec.json"},   {"fit", "fit5/config.json", "fit5.json"},
        {"stationary", "stationary/gauss.json", "stationary_gauss.json"},
        {"stationary", "stationary/laplace.json", "stationary_laplace.json"},
        {"cme", "cme/config.json", "cme.json"},                {"plot", "plot/figure1.json", "figure1.csv"},
        {"plot", "plot/figure2.json", "figure2.csv"}};
    for (const auto& [cmd, config, golden] : runs) {
        const std::string args = cmd + " --seed 11 --config " + tooltest::quote((fixtures / config).string());
        const auto a = tooltest::run_tool(tool, args);
        const auto b = tooltest::run_tool(tool, args);
        REQUIRE_MESSAGE(a.exit_code == 0, config << ": " << a.err);
        CHECK(a.out == b.out);
        const bool is_json = cmd != "plot";
        if (is_json) CHECK(json::parse(a.out)["schema_version"] == kSchemaVersion);
        check_golden(golden, a.out, is_json);
    }

    // --out and --emit-plot write the same bytes as stdout.
    const fs::path dir = fs::temp_directory_path() / ("ksel_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const std::string cfg = tooltest::quote((fixtures / "fit5" / "config.json").string());
    const auto plain = tooltest::run_tool(tool, "fit --config " + cfg);
    const auto files = tooltest::run_tool(tool, "fit --config " + cfg + " --out " + tooltest::quote((dir / "r.json").string()) +
                                                    " --emit-plot " + tooltest::quote((dir / "p.csv").string()));
    CHECK(files.exit_code == 0);
    CHECK(files.out.empty());
    // The digest ignores output paths.
    CHECK(tooltest::slurp(dir / "r.json") == plain.out);
    CHECK(tooltest::slurp(dir / "p.csv").rfind("eigenvalue,mass,rkhs_term,ambient_term\n", 0) == 0);
    fs::remove_all(dir);
}
