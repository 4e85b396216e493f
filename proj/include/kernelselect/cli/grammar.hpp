#pragma once

// Text form of kernel specs:
//
//   spec  := name '(' [arg (',' arg)*] ')'
//   arg   := key '=' value | value
//   value := number | '[' [number (',' number)*] ']' | '@' path
//
// Known forms: gauss(scale=s), laplace(scale=s), constant(value=v),
// spectral(lambdas=[...], basis=@file), gram(@file).

#include <filesystem>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "kernelselect/kernel_core.hpp"

namespace ksel::cli {

class GrammarError : public IngestionError {
public:
    GrammarError(std::string message, std::size_t position);
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

struct FileRef {
    std::string path;
    bool operator==(const FileRef&) const = default;
};

using ArgValue = std::variant<double, std::vector<double>, FileRef>;

struct KernelArg {
    /// Empty for positional arguments.
    std::string key;
    ArgValue value;
    bool operator==(const KernelArg&) const = default;
};

struct KernelExpr {
    std::string name;
    std::vector<KernelArg> args;
    bool operator==(const KernelExpr&) const = default;
};

/// Syntax only; names and arguments are checked by resolve().
KernelExpr parse_kernel(const std::string& text);
/// Canonical form: no whitespace except after commas, shortest round-trip numbers.
std::string print_kernel(const KernelExpr& expr);

/// Builds the kernel. Relative file paths are resolved against `base_dir`. `measure`
/// is required by spectral(...), whose basis file has one row per eigenfunction and
/// one column per atom.
KernelSpec resolve_kernel(const KernelExpr& expr, const std::filesystem::path& base_dir,
                          std::shared_ptr<const DiscreteMeasure> measure = nullptr);

/// Files referenced by the expression, in order of appearance.
std::vector<std::string> referenced_files(const KernelExpr& expr);

}  // namespace ksel::cli
