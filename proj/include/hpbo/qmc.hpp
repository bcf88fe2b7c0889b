#pragma once

// Unscrambled Sobol sequence, Gray-code ordering, with the Joe-Kuo direction
// numbers for the first 21 dimensions. The all-zeros point at index 0 is
// skipped, so the first emitted point is (0.5, ..., 0.5).

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hpbo/errors.hpp"

namespace hpbo {

/// One row of a direction-number table: polynomial degree s, packed interior
/// coefficients a, and initial direction integers m_1..m_s.
struct DirectionNumbers {
    unsigned degree = 0;
    std::uint32_t coefficients = 0;
    std::vector<std::uint32_t> initial;

    bool operator==(const DirectionNumbers&) const = default;
};

inline constexpr std::size_t kSobolMaxDimension = 21;

/// Same content as data/sobol_directions.txt.
inline const std::vector<DirectionNumbers>& default_direction_table() {
    static const std::vector<DirectionNumbers> table = {
        {0, 0, {}},
        {1, 0, {1}},
        {2, 1, {1, 3}},
        {3, 1, {1, 3, 1}},
        {3, 2, {1, 1, 1}},
        {4, 1, {1, 1, 3, 3}},
        {4, 4, {1, 3, 5, 13}},
        {5, 2, {1, 1, 5, 5, 17}},
        {5, 4, {1, 1, 5, 5, 5}},
        {5, 7, {1, 1, 7, 11, 19}},
        {5, 11, {1, 1, 5, 1, 1}},
        {5, 13, {1, 1, 1, 3, 11}},
        {5, 14, {1, 3, 5, 5, 31}},
        {6, 1, {1, 3, 3, 9, 7, 49}},
        {6, 13, {1, 1, 1, 15, 21, 21}},
        {6, 16, {1, 3, 1, 13, 27, 49}},
        {6, 19, {1, 1, 1, 15, 7, 5}},
        {6, 22, {1, 3, 1, 15, 13, 25}},
        {6, 25, {1, 1, 5, 5, 19, 61}},
        {7, 1, {1, 3, 7, 11, 23, 15, 103}},
        {7, 4, {1, 3, 7, 13, 13, 15, 69}},
    };
    return table;
}

/// Reads the text format: one line per dimension, "s a m_1 .. m_s".
/// Blank lines and lines starting with '#' are ignored.
inline std::vector<DirectionNumbers> parse_direction_table(std::istream& in) {
    std::vector<DirectionNumbers> table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
        std::istringstream ls(line);
        DirectionNumbers row;
        if (!(ls >> row.degree >> row.coefficients))
            throw UsageError("direction table line " + std::to_string(lineno) + ": expected 's a'");
        for (unsigned k = 0; k < row.degree; ++k) {
            std::uint32_t m = 0;
            if (!(ls >> m))
                throw UsageError("direction table line " + std::to_string(lineno) +
                                 ": expected " + std::to_string(row.degree) + " initial numbers");
            if (m % 2 == 0 || m >= (1u << (k + 1)))
                throw UsageError("direction table line " + std::to_string(lineno) +
                                 ": m_k must be odd and < 2^k");
            row.initial.push_back(m);
        }
        std::string extra;
        if (ls >> extra)
            throw UsageError("direction table line " + std::to_string(lineno) + ": trailing data");
        table.push_back(std::move(row));
    }
    return table;
}

class SobolEngine {
public:
    static constexpr unsigned kBits = 32;

    explicit SobolEngine(std::size_t dimension,
                         const std::vector<DirectionNumbers>& table = default_direction_table())
        : dimension_(dimension) {
        if (dimension < 1 || dimension > kSobolMaxDimension || dimension > table.size())
            throw UsageError("Sobol dimension must be in [1, " +
                             std::to_string(std::min(kSobolMaxDimension, table.size())) + "], got " +
                             std::to_string(dimension));
        directions_.resize(dimension);
        for (std::size_t j = 0; j < dimension; ++j) directions_[j] = make_directions(table[j]);
        state_.assign(dimension, 0);
        // Skip index 0.
        advance();
    }

    std::size_t dimension() const { return dimension_; }

    /// Number of points emitted so far (not counting the skipped origin).
    std::uint64_t index() const { return index_ - 1; }

    /// Draws n points as rows of an n x d matrix.
    Eigen::MatrixXd next(std::size_t n) {
        if (n < 1) throw UsageError("sobol_next: n must be >= 1");
        Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dimension_));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < dimension_; ++j)
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = to_unit(state_[j]);
            advance();
        }
        return out;
    }

    Eigen::VectorXd next_point() { return next(1).row(0).transpose(); }

    /// Jumps ahead by n points without generating them.
    void skip(std::uint64_t n) {
        index_ += n;
        const std::uint64_t gray = index_ ^ (index_ >> 1);
        for (std::size_t j = 0; j < dimension_; ++j) {
            std::uint32_t x = 0;
            for (unsigned b = 0; b < kBits; ++b)
                if ((gray >> b) & 1u) x ^= directions_[j][b];
            state_[j] = x;
        }
    }

private:
    static double to_unit(std::uint32_t x) { return static_cast<double>(x) / 4294967296.0; }

    static std::array<std::uint32_t, kBits> make_directions(const DirectionNumbers& row) {
        std::array<std::uint32_t, kBits> v{};
        const unsigned s = row.degree;
        if (s == 0) {
            for (unsigned k = 0; k < kBits; ++k) v[k] = 1u << (kBits - 1 - k);
            return v;
        }
        std::array<std::uint32_t, kBits> m{};
        for (unsigned k = 0; k < s && k < kBits; ++k) m[k] = row.initial[k];
        for (unsigned k = s; k < kBits; ++k) {
            std::uint32_t mk = m[k - s] ^ (m[k - s] << s);
            for (unsigned i = 1; i < s; ++i)
                if ((row.coefficients >> (s - 1 - i)) & 1u) mk ^= m[k - i] << i;
            m[k] = mk;
        }
        for (unsigned k = 0; k < kBits; ++k) v[k] = m[k] << (kBits - 1 - k);
        return v;
    }

    void advance() {
        // Flip the direction number of the lowest zero bit of the current index.
        unsigned c = 0;
        for (std::uint64_t i = index_; i & 1u; i >>= 1) ++c;
        if (c >= kBits) throw UsageError("Sobol sequence exhausted (2^32 points)");
        for (std::size_t j = 0; j < dimension_; ++j) state_[j] ^= directions_[j][c];
        ++index_;
    }

    std::size_t dimension_;
    std::vector<std::array<std::uint32_t, kBits>> directions_;
    std::vector<std::uint32_t> state_;
    std::uint64_t index_ = 0;
};

/// Convenience wrapper: the first n post-skip points of a fresh engine.
inline Eigen::MatrixXd sobol_points(std::size_t dimension, std::size_t n, std::uint64_t offset = 0) {
    SobolEngine engine(dimension);
    if (offset) engine.skip(offset);
    return engine.next(n);
}

}  // namespace hpbo
