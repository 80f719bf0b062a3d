#pragma once

// Per-task canonical forms used for label comparison and vote counting.
// Case folding and punctuation handling are ASCII-only; other bytes pass
// through unchanged.

#include <string>
#include <string_view>

#include "mamr/core.hpp"

namespace mamr {

/// Last whitespace-delimited word, lowercased, with surrounding punctuation
/// removed.
std::string canon_folio(std::string_view raw);

/// Lowercase; first digit run if any, else the first whole word that spells
/// a number zero..twenty (as digits), else the first word stripped of
/// surrounding punctuation.
std::string canon_raco(std::string_view raw);

/// canon_raco without the spelled-number mapping.
std::string canon_raco_unmapped(std::string_view raw);

/// Lowercase, delete punctuation, then remove whole-word phrases until
/// fixpoint, in this order: "at the end of the" plus the word after it,
/// "has", "is playing", "is dancing with", "the", "ball", "present".
/// Whitespace is collapsed.
std::string canon_tso(std::string_view raw);

std::string canonicalize(Task task, std::string_view raw);

/// canonical(raw) == canonical(gold). For RACO the unmapped raw form is also
/// compared against the canonical gold, so a stray spelled number in a
/// non-numeric answer ("blue, not two") still matches the gold "blue".
bool answers_match(Task task, std::string_view raw, std::string_view gold);

/// String-keyed overload; throws ConfigError for unknown task ids.
bool answers_match(std::string_view task, std::string_view raw, std::string_view gold);

}  // namespace mamr
