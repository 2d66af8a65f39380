#pragma once

#include <stdexcept>
#include <string>

namespace pmerge {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input vector shorter than two entries.
struct length_error : error {
    using error::error;
};

// NaN or negative entry, or an otherwise malformed value.
struct value_error : error {
    using error::error;
};

// Parameter outside its documented range (k, r, K, ...).
struct range_error : error {
    using error::error;
};

// Root bracketing failed; signals an implementation bug, not bad input.
struct convergence_error : error {
    using error::error;
};

// A sampled function violated its required monotonicity.
struct non_monotone_error : error {
    using error::error;
};

// Merging family has no definition at the requested arity.
struct arity_error : error {
    using error::error;
};

// Borderline search cannot reach the target even as eps -> 0.
struct no_rejection_error : error {
    using error::error;
};

// Malformed CSV or other input file.
struct parse_error : error {
    using error::error;
};

// Unknown or malformed method / calibrator spec string.
struct method_error : error {
    using error::error;
};

// Diagonal-curve input is not increasing.
struct curve_error : error {
    using error::error;
};

// Lower set passed to upper-p-probability is empty.
struct empty_set_error : error {
    using error::error;
};

}  // namespace pmerge
