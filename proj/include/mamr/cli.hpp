#pragma once

#include <iosfwd>
#include <memory>
#include <string>

#include "mamr/core.hpp"
#include "mamr/gateway.hpp"

namespace mamr {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `mamr` tool. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Text backend from "scripted:<path>" or "http:<url>". For scripted specs
/// naming a missing file whose stem is "perfect" or "p<NN>", `synthetic`
/// (if given) supplies a generated reasoner. Throws ConfigError otherwise.
struct SynthTask;
std::shared_ptr<TextBackend> make_text_backend(const std::string& spec, const std::string& model,
                                               const SynthTask* synthetic);

/// "mock:<dim>" or "http:<url>[#<dim>]".
std::shared_ptr<EmbeddingBackend> make_embedder(const std::string& spec, const std::string& model);

}  // namespace mamr
