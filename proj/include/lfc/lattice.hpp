#pragma once
// Rectangular lattice geometry and binary lithology/fluid fields.
//
// Public coordinates are 1-based (row i = 1..m from the top, column
// j = 1..n from the left). Storage is row-major and 0-based; all
// conversion between the two happens in this header.

#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lfc/error.hpp"

namespace lfc {

struct GridDims {
    int rows = 1;  // m, vertical (time) samples
    int cols = 1;  // n, horizontal traces

    GridDims() = default;
    GridDims(int m, int n) : rows(m), cols(n) {
        if (m < 1 || n < 1) {
            throw DomainError("lattice dimensions must be positive, got " + std::to_string(m) + "x" +
                              std::to_string(n));
        }
    }

    std::size_t size() const noexcept { return static_cast<std::size_t>(rows) * cols; }
    friend bool operator==(const GridDims&, const GridDims&) = default;
};

// Lattice node, 1-based.
struct Node {
    int i = 1;
    int j = 1;
    friend auto operator<=>(const Node&, const Node&) = default;
};

// Relative displacement (di rows, dj columns).
struct CellOffset {
    int di = 0;
    int dj = 0;
    friend auto operator<=>(const CellOffset&, const CellOffset&) = default;
    CellOffset operator-() const noexcept { return {-di, -dj}; }
    CellOffset operator-(const CellOffset& o) const noexcept { return {di - o.di, dj - o.dj}; }
};

inline bool contains(const GridDims& dims, const Node& v) noexcept {
    return v.i >= 1 && v.i <= dims.rows && v.j >= 1 && v.j <= dims.cols;
}

inline void require_inside(const GridDims& dims, const Node& v) {
    if (!contains(dims, v)) {
        throw DomainError("node (" + std::to_string(v.i) + "," + std::to_string(v.j) +
                          ") outside " + std::to_string(dims.rows) + "x" + std::to_string(dims.cols) +
                          " lattice");
    }
}

// 0-based row-major position, n*(i-1) + (j-1).
inline std::size_t linear_index(const GridDims& dims, const Node& v) noexcept {
    return static_cast<std::size_t>(v.i - 1) * dims.cols + static_cast<std::size_t>(v.j - 1);
}

inline Node node_at(const GridDims& dims, std::size_t linear) noexcept {
    return {static_cast<int>(linear / dims.cols) + 1, static_cast<int>(linear % dims.cols) + 1};
}

// All nodes strictly earlier than `v` in row-major order.
inline std::vector<Node> predecessor_set(const GridDims& dims, const Node& v) {
    require_inside(dims, v);
    std::vector<Node> out;
    const std::size_t end = linear_index(dims, v);
    out.reserve(end);
    for (std::size_t k = 0; k < end; ++k) out.push_back(node_at(dims, k));
    return out;
}

// (tau + v) intersected with the lattice, in template order.
inline std::vector<Node> translate_template(const std::vector<CellOffset>& tau, const Node& v,
                                            const GridDims& dims) {
    std::vector<Node> out;
    for (const auto& t : tau) {
        Node u{v.i + t.di, v.j + t.dj};
        if (contains(dims, u)) out.push_back(u);
    }
    return out;
}

inline std::vector<Node> column_nodes(const GridDims& dims, int j) {
    if (j < 1 || j > dims.cols) {
        throw DomainError("column " + std::to_string(j) + " outside 1.." + std::to_string(dims.cols));
    }
    std::vector<Node> out;
    out.reserve(dims.rows);
    for (int i = 1; i <= dims.rows; ++i) out.push_back({i, j});
    return out;
}

// Binary field of lithology/fluid classes: 0 = shale, 1 = oil sand.
class LfcField {
public:
    LfcField() = default;
    explicit LfcField(GridDims dims, std::uint8_t fill = 0) : dims_(dims), values_(dims.size(), fill) {
        if (fill > 1) throw DomainError("field values must be 0 or 1");
    }
    LfcField(GridDims dims, std::vector<std::uint8_t> values) : dims_(dims), values_(std::move(values)) {
        if (values_.size() != dims_.size()) throw DomainError("field length does not match dimensions");
        for (auto v : values_) {
            if (v > 1) throw DomainError("field values must be 0 or 1");
        }
    }

    const GridDims& dims() const noexcept { return dims_; }
    int rows() const noexcept { return dims_.rows; }
    int cols() const noexcept { return dims_.cols; }
    std::size_t size() const noexcept { return values_.size(); }

    // 1-based access.
    std::uint8_t operator()(int i, int j) const noexcept { return values_[linear_index(dims_, {i, j})]; }
    std::uint8_t at(const Node& v) const {
        require_inside(dims_, v);
        return values_[linear_index(dims_, v)];
    }
    void set(const Node& v, std::uint8_t value) {
        require_inside(dims_, v);
        if (value > 1) throw DomainError("field values must be 0 or 1");
        values_[linear_index(dims_, v)] = value;
    }
    // Value at (i,j), or 0 when the node is outside the lattice.
    std::uint8_t value_or_shale(int i, int j) const noexcept {
        if (i < 1 || i > dims_.rows || j < 1 || j > dims_.cols) return 0;
        return (*this)(i, j);
    }

    // 0-based raw access, row-major.
    std::uint8_t raw(std::size_t k) const noexcept { return values_[k]; }
    void set_raw(std::size_t k, std::uint8_t value) noexcept { values_[k] = value; }
    const std::vector<std::uint8_t>& values() const noexcept { return values_; }

    std::vector<std::uint8_t> column(int j) const {
        column_nodes(dims_, j);  // range check
        std::vector<std::uint8_t> out(dims_.rows);
        for (int i = 1; i <= dims_.rows; ++i) out[i - 1] = (*this)(i, j);
        return out;
    }
    void set_column(int j, const std::vector<std::uint8_t>& col) {
        column_nodes(dims_, j);
        if (static_cast<int>(col.size()) != dims_.rows) throw DomainError("column length mismatch");
        for (int i = 1; i <= dims_.rows; ++i) set({i, j}, col[i - 1]);
    }

    std::size_t count_sand() const noexcept {
        std::size_t c = 0;
        for (auto v : values_) c += v;
        return c;
    }

    friend bool operator==(const LfcField&, const LfcField&) = default;

private:
    GridDims dims_{};
    std::vector<std::uint8_t> values_;
};

// Field file: "m n" then m lines of n space-separated 0/1 values.
inline void write_field(std::ostream& os, const LfcField& f) {
    os << f.rows() << ' ' << f.cols() << '\n';
    for (int i = 1; i <= f.rows(); ++i) {
        for (int j = 1; j <= f.cols(); ++j) {
            if (j > 1) os << ' ';
            os << static_cast<int>(f(i, j));
        }
        os << '\n';
    }
}

inline LfcField read_field(std::istream& is) {
    int m = 0, n = 0;
    if (!(is >> m >> n) || m < 1 || n < 1) throw ConfigError("field file: bad header");
    GridDims dims(m, n);
    std::vector<std::uint8_t> values(dims.size());
    for (auto& v : values) {
        int x = -1;
        if (!(is >> x)) throw ConfigError("field file: truncated body");
        if (x != 0 && x != 1) throw ConfigError("field file: value " + std::to_string(x) + " not in {0,1}");
        v = static_cast<std::uint8_t>(x);
    }
    return LfcField(dims, std::move(values));
}

inline std::string to_string(const LfcField& f) {
    std::ostringstream os;
    write_field(os, f);
    return os.str();
}

}  // namespace lfc
