#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pmerge/errors.hpp"

namespace pmerge {

// Validated vector of K >= 2 p-values. Entries live in [0, inf); everything
// above 1 is uninformative but legal. Order statistics are computed once at
// construction (stable sort, so tied entries keep input order) and shared by
// all evaluators. Immutable afterwards.
class PVector {
 public:
    static PVector validate(std::vector<double> raw) {
        if (raw.size() < 2)
            throw length_error("p-vector needs at least 2 entries, got " +
                               std::to_string(raw.size()));
        for (std::size_t i = 0; i < raw.size(); ++i) {
            double v = raw[i];
            if (std::isnan(v)) throw value_error("NaN p-value at index " + std::to_string(i));
            if (v < 0.0) throw value_error("negative p-value at index " + std::to_string(i));
            if (std::isinf(v)) throw value_error("infinite p-value at index " + std::to_string(i));
        }
        return PVector(std::move(raw));
    }

    // One p-value per line; optional header "p"; '#' comment lines skipped.
    static PVector from_csv(std::istream& in) {
        std::vector<double> vals;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            std::size_t a = line.find_first_not_of(" \t");
            if (a == std::string::npos) continue;
            std::size_t b = line.find_last_not_of(" \t");
            std::string tok = line.substr(a, b - a + 1);
            if (tok.empty() || tok[0] == '#') continue;
            if (lineno == 1 && (tok == "p" || tok == "P")) continue;
            try {
                std::size_t used = 0;
                double v = std::stod(tok, &used);
                if (used != tok.size()) throw std::invalid_argument(tok);
                vals.push_back(v);
            } catch (const std::exception&) {
                throw parse_error("line " + std::to_string(lineno) +
                                  ": cannot parse p-value '" + tok + "'");
            }
        }
        return validate(std::move(vals));
    }

    int k() const { return static_cast<int>(values_.size()); }
    const std::vector<double>& values() const { return values_; }
    std::span<const double> sorted() const { return sorted_; }

    /// m-th order statistic, 1-based: order_stat(1) = min.
    double order_stat(int m) const { return sorted_[static_cast<std::size_t>(m - 1)]; }
    double min() const { return sorted_.front(); }
    double max() const { return sorted_.back(); }

    PVector scaled(double lambda) const {
        std::vector<double> v(values_);
        for (double& x : v) x *= lambda;
        return PVector(std::move(v));
    }

    PVector clamped_at_one() const {
        std::vector<double> v(values_);
        for (double& x : v) x = std::min(x, 1.0);
        return PVector(std::move(v));
    }

 private:
    explicit PVector(std::vector<double> vals) : values_(std::move(vals)), sorted_(values_) {
        if (!std::is_sorted(sorted_.begin(), sorted_.end()))
            std::stable_sort(sorted_.begin(), sorted_.end());
    }

    std::vector<double> values_;
    std::vector<double> sorted_;
};

inline PVector pvector_from_csv_string(const std::string& text) {
    std::istringstream ss(text);
    return PVector::from_csv(ss);
}

}  // namespace pmerge
