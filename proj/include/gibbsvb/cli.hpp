#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gibbsvb/geometry.hpp"
#include "gibbsvb/model.hpp"

namespace gibbsvb::cli {

// Runs one command line (args excludes the program name). Returns 0 on
// success, 2 on usage errors and 1 on data or numerical failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Converts a flat `key=value` config file into `--key value` tokens.
std::vector<std::string> read_config_tokens(const std::string& path);

Window parse_window(const std::string& text);
std::vector<double> parse_doubles(const std::string& text);

// constant | poly-y:D | poly-xy:D
TrendBasis parse_trend(const std::string& text, const Window& frame, bool per_mark, bool per_mark_intercept);
// none | strauss:R | cross-strauss:R | step:K:RMAX | basis:K:RMAX[:BW] | lj:EPS:SIGMA[:CUT]
InteractionSpec parse_interaction(const std::string& text);

} // namespace gibbsvb::cli
