#ifndef BLOCKMT_FORMAT_HPP
#define BLOCKMT_FORMAT_HPP

#include <string>

#include <fmt/format.h>

namespace blockmt {

/// Machine-readable form: 17 significant digits.
inline std::string format_exact(double x) { return fmt::format("{:.17g}", x); }

/// Human summaries: 4 significant digits.
inline std::string format_short(double x) { return fmt::format("{:.4g}", x); }

} // namespace blockmt

#endif // BLOCKMT_FORMAT_HPP
