#pragma once

#include <string>

namespace degen {

/// Three-valued outcome: a failed hypothesis is reported as not_applicable,
/// never as a failure of the conclusion.
enum class Verdict { pass, fail, not_applicable };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::not_applicable: return "not_applicable";
  }
  return "unknown";
}

}  // namespace degen
