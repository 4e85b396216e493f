#include "kernelselect/cli/grammar.hpp"

#include <cctype>
#include <charconv>

#include <fmt/format.h>

#include "kernelselect/cli/csv.hpp"

namespace ksel::cli {

GrammarError::GrammarError(std::string message, std::size_t position)
    : IngestionError(fmt::format("kernel spec, column {}: {}", position + 1, message)), position_(position) {}

namespace {

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    KernelExpr parse() {
        KernelExpr e;
        skip_ws();
        e.name = identifier("kernel name");
        skip_ws();
        expect('(');
        skip_ws();
        if (peek() != ')') {
            while (true) {
                e.args.push_back(argument());
                skip_ws();
                if (peek() == ',') {
                    ++pos_;
                    skip_ws();
                    continue;
                }
                break;
            }
        }
        expect(')');
        skip_ws();
        if (pos_ != s_.size()) throw GrammarError("unexpected trailing input", pos_);
        return e;
    }

private:
    char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    void expect(char c) {
        if (peek() != c) {
            if (pos_ >= s_.size()) throw GrammarError(fmt::format("expected '{}' but input ended", c), pos_);
            throw GrammarError(fmt::format("expected '{}' but found '{}'", c, s_[pos_]), pos_);
        }
        ++pos_;
    }

    std::string identifier(const char* what) {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        if (pos_ == start || std::isdigit(static_cast<unsigned char>(s_[start])))
            throw GrammarError(fmt::format("expected {}", what), start);
        return s_.substr(start, pos_ - start);
    }

    double number() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' ||
                                    s_[pos_] == '-' || s_[pos_] == '+'))
            ++pos_;
        const char* first = s_.data() + start;
        const char* last = s_.data() + pos_;
        if (first != last && *first == '+') ++first;
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (start == pos_ || ec != std::errc() || ptr != last || !std::isfinite(v))
            throw GrammarError("expected a finite number", start);
        return v;
    }

    ArgValue value() {
        const char c = peek();
        if (c == '@') {
            ++pos_;
            const std::size_t start = pos_;
            while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ')' && !std::isspace(static_cast<unsigned char>(s_[pos_])))
                ++pos_;
            if (pos_ == start) throw GrammarError("expected a file path after '@'", start);
            return FileRef{s_.substr(start, pos_ - start)};
        }
        if (c == '[') {
            ++pos_;
            std::vector<double> xs;
            skip_ws();
            if (peek() != ']') {
                while (true) {
                    skip_ws();
                    xs.push_back(number());
                    skip_ws();
                    if (peek() == ',') {
                        ++pos_;
                        continue;
                    }
                    break;
                }
            }
            expect(']');
            return xs;
        }
        return number();
    }

    KernelArg argument() {
        const std::size_t start = pos_;
        if (std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_') {
            std::string key = identifier("argument name");
            skip_ws();
            if (peek() != '=') throw GrammarError("expected '=' after argument name", pos_);
            ++pos_;
            skip_ws();
            return KernelArg{std::move(key), value()};
        }
        if (pos_ >= s_.size()) throw GrammarError("unexpected end of input", start);
        return KernelArg{"", value()};
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

struct Printer {
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(const std::vector<double>& xs) const {
        std::string out = "[";
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (i) out += ", ";
            out += format_double(xs[i]);
        }
        return out + "]";
    }
    std::string operator()(const FileRef& f) const { return "@" + f.path; }
};

const KernelArg* find_arg(const KernelExpr& e, const std::string& key) {
    for (const auto& a : e.args)
        if (a.key == key) return &a;
    return nullptr;
}

void check_args(const KernelExpr& e, std::initializer_list<const char*> allowed, bool positional_ok) {
    for (const auto& a : e.args) {
        if (a.key.empty()) {
            if (!positional_ok) throw IngestionError(fmt::format("{}(...): positional arguments are not accepted", e.name));
            continue;
        }
        bool ok = false;
        for (const char* k : allowed) ok = ok || a.key == k;
        if (!ok) throw IngestionError(fmt::format("{}(...): unknown argument '{}'", e.name, a.key));
    }
}

double number_arg(const KernelExpr& e, const std::string& key, double fallback, bool required = false) {
    const KernelArg* a = find_arg(e, key);
    if (!a) {
        if (required) throw IngestionError(fmt::format("{}(...): missing argument '{}'", e.name, key));
        return fallback;
    }
    if (const double* v = std::get_if<double>(&a->value)) return *v;
    throw IngestionError(fmt::format("{}(...): argument '{}' must be a number", e.name, key));
}

std::filesystem::path file_path(const std::filesystem::path& base, const FileRef& f) {
    const std::filesystem::path p(f.path);
    return p.is_absolute() ? p : base / p;
}

KernelSpec gram_from_file(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path);
    const std::size_t n = t.rows.size();
    if (n == 0) throw IngestionError(path.string() + ": gram file has no rows");
    if (t.header.size() <= n) throw IngestionError(path.string() + ": expected columns x1..xd,g1..gn");
    const std::size_t d = t.header.size() - n;
    std::vector<Point> pts;
    CMatrix g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        pts.emplace_back(std::vector<double>(t.rows[i].begin(), t.rows[i].begin() + static_cast<std::ptrdiff_t>(d)));
        for (std::size_t j = 0; j < n; ++j) g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.rows[i][d + j];
    }
    try {
        return GramKernel(std::move(pts), std::move(g));
    } catch (const ArgumentError& e) {
        throw IngestionError(path.string() + ": " + e.what());
    }
}

}  // namespace

KernelExpr parse_kernel(const std::string& text) { return Parser(text).parse(); }

std::string print_kernel(const KernelExpr& expr) {
    std::string out = expr.name + "(";
    for (std::size_t i = 0; i < expr.args.size(); ++i) {
        if (i) out += ", ";
        if (!expr.args[i].key.empty()) out += expr.args[i].key + "=";
        out += std::visit(Printer{}, expr.args[i].value);
    }
    return out + ")";
}

std::vector<std::string> referenced_files(const KernelExpr& expr) {
    std::vector<std::string> out;
    for (const auto& a : expr.args)
        if (const FileRef* f = std::get_if<FileRef>(&a.value)) out.push_back(f->path);
    return out;
}

KernelSpec resolve_kernel(const KernelExpr& e, const std::filesystem::path& base_dir,
                          std::shared_ptr<const DiscreteMeasure> measure) {
    try {
        if (e.name == "gauss" || e.name == "laplace") {
            check_args(e, {"scale"}, false);
            const double s = number_arg(e, "scale", 1.0);
            if (!(s > 0)) throw IngestionError(e.name + "(...): scale must be positive");
            return e.name == "gauss" ? ClosedFormKernel::gauss(s) : ClosedFormKernel::laplace(s);
        }
        if (e.name == "constant") {
            check_args(e, {"value"}, false);
            return ClosedFormKernel::constant(number_arg(e, "value", 0.0, true));
        }
        if (e.name == "gram") {
            check_args(e, {}, true);
            if (e.args.size() != 1 || !std::holds_alternative<FileRef>(e.args[0].value))
                throw IngestionError("gram(...): expected a single @file argument");
            return gram_from_file(file_path(base_dir, std::get<FileRef>(e.args[0].value)));
        }
        if (e.name == "spectral") {
            check_args(e, {"lambdas", "basis"}, false);
            const KernelArg* l = find_arg(e, "lambdas");
            const KernelArg* b = find_arg(e, "basis");
            if (!l || !std::holds_alternative<std::vector<double>>(l->value))
                throw IngestionError("spectral(...): lambdas=[...] is required");
            if (!b || !std::holds_alternative<FileRef>(b->value))
                throw IngestionError("spectral(...): basis=@file is required");
            if (!measure) throw IngestionError("spectral(...): needs the measure its basis is orthonormal for");
            const auto& lambdas = std::get<std::vector<double>>(l->value);
            const auto path = file_path(base_dir, std::get<FileRef>(b->value));
            const CsvTable t = read_csv(path);
            if (t.rows.size() != lambdas.size())
                throw IngestionError(fmt::format("{}: {} basis rows for {} eigenvalues", path.string(), t.rows.size(), lambdas.size()));
            if (t.header.size() != measure->size())
                throw IngestionError(fmt::format("{}: {} columns for {} atoms", path.string(), t.header.size(), measure->size()));
            CMatrix basis(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size()));
            for (std::size_t i = 0; i < t.rows.size(); ++i)
                for (std::size_t k = 0; k < t.header.size(); ++k)
                    basis(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = t.rows[i][k];
            RVector lam = Eigen::Map<const RVector>(lambdas.data(), static_cast<Eigen::Index>(lambdas.size()));
            return SpectralKernel(std::move(lam), std::move(basis), std::move(measure));
        }
    } catch (const ArgumentError& err) {
        throw IngestionError(std::string("kernel '") + print_kernel(e) + "': " + err.what());
    }
    throw IngestionError("unknown kernel '" + e.name + "' (expected gauss, laplace, constant, spectral or gram)");
}

}  // namespace ksel::cli
