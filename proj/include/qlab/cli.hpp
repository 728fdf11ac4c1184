#pragma once

#include "qlab/suite.hpp"

#include "json.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace qlab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitVerdict = 2;

std::string version_string();

/// One qlab invocation, args without the program name. Exit code per the
/// 0 / 2 / 1 contract; errors are reported on err.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Manifest:
///   {"pair": path, "seed": n, "output_dir": dir, "tool_version": s,
///    "commands": [{"id": s, "argv": [..]}]}
/// Paths resolve against base_dir; --out and --in values against the
/// output directory. Each command's stdout goes to <output_dir>/<id>.out.
/// Throws SchemaError and CommandFailed(id).
RunReport run_manifest(const nlohmann::json& manifest, const std::string& base_dir, const std::string& source = "<manifest>");
RunReport run_manifest(const std::string& path);

} // namespace qlab
