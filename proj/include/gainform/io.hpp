#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gainform/errors.hpp"
#include "gainform/model.hpp"

namespace gainform {

// File formats. All matrices are row-major JSON arrays of arrays of finite
// doubles, written with 17 significant digits so that save/load round-trips
// bit-exactly.
//
//   system:      {"a": [[...]], "b": [[...]]}
//   gain:        {"l": [[...]]}
//   state space: {"a": [[...]], "b": [[...]], "c": [[...]], "d": [[...]]}
//   coordinated: {"blocks": [{"a": [[...]], "b": [[...]]}, ...]}

namespace detail {

inline std::string format_double(double v) {
    if (v == 0.0) {
        return "0";  // avoid "-0"
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void append_matrix_json(std::string& out, const Eigen::MatrixXd& m) {
    out += '[';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (i > 0) out += ", ";
        out += '[';
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) out += ", ";
            out += format_double(m(i, j));
        }
        out += ']';
    }
    out += ']';
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open file: " + path);
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open file for writing: " + path);
    }
    out << text;
    if (!out) {
        throw Error("write failed: " + path);
    }
}

inline nlohmann::json parse_json(const std::string& text, const std::string& context) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(context + ": " + e.what());
    }
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& field) {
    if (!j.contains(field)) {
        throw ParseError("missing field \"" + field + "\"");
    }
    const nlohmann::json& arr = j.at(field);
    if (!arr.is_array() || arr.empty()) {
        throw ParseError("field \"" + field + "\" must be a non-empty array of rows");
    }
    const std::size_t rows = arr.size();
    std::size_t cols = 0;
    Eigen::MatrixXd m;
    for (std::size_t i = 0; i < rows; ++i) {
        const nlohmann::json& row = arr.at(i);
        if (!row.is_array()) {
            throw ParseError("field \"" + field + "\" row " + std::to_string(i) +
                             " is not an array");
        }
        if (i == 0) {
            cols = row.size();
            if (cols == 0) {
                throw ParseError("field \"" + field + "\" has an empty row");
            }
            m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        } else if (row.size() != cols) {
            throw ParseError("field \"" + field + "\" row " + std::to_string(i) +
                             " has ragged length");
        }
        for (std::size_t k = 0; k < cols; ++k) {
            const nlohmann::json& cell = row.at(k);
            if (!cell.is_number()) {
                throw ParseError("field \"" + field + "\" entry (" + std::to_string(i) + "," +
                                 std::to_string(k) + ") is not a number");
            }
            const double v = cell.get<double>();
            if (!std::isfinite(v)) {
                throw ParseError("field \"" + field + "\" entry (" + std::to_string(i) + "," +
                                 std::to_string(k) + ") is not finite");
            }
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
        }
    }
    return m;
}

/// FNV-1a 64-bit digest, reported by the CLI to identify input files.
inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

inline LtiSystem load_system(const std::string& path, double sym_tol = kDefaultSymTol,
                             double stab_margin = kDefaultStabMargin) {
    const nlohmann::json j = detail::parse_json(detail::read_file(path), path);
    return validate_system(detail::matrix_from_json(j, "a"), detail::matrix_from_json(j, "b"),
                           sym_tol, stab_margin);
}

inline void save_system(const std::string& path, const LtiSystem& sys) {
    std::string out = "{\"a\": ";
    detail::append_matrix_json(out, sys.a());
    out += ", \"b\": ";
    detail::append_matrix_json(out, sys.b());
    out += "}\n";
    detail::write_file(path, out);
}

inline GainMatrix load_gain(const std::string& path) {
    const nlohmann::json j = detail::parse_json(detail::read_file(path), path);
    return GainMatrix{detail::matrix_from_json(j, "l")};
}

inline void save_gain(const std::string& path, const GainMatrix& gain) {
    std::string out = "{\"l\": ";
    detail::append_matrix_json(out, gain.l);
    out += "}\n";
    detail::write_file(path, out);
}

inline StateSpace load_state_space(const std::string& path) {
    const nlohmann::json j = detail::parse_json(detail::read_file(path), path);
    return StateSpace(detail::matrix_from_json(j, "a"), detail::matrix_from_json(j, "b"),
                      detail::matrix_from_json(j, "c"), detail::matrix_from_json(j, "d"));
}

inline void save_state_space(const std::string& path, const StateSpace& ss) {
    std::string out = "{\"a\": ";
    detail::append_matrix_json(out, ss.a);
    out += ", \"b\": ";
    detail::append_matrix_json(out, ss.b);
    out += ", \"c\": ";
    detail::append_matrix_json(out, ss.c);
    out += ", \"d\": ";
    detail::append_matrix_json(out, ss.d);
    out += "}\n";
    detail::write_file(path, out);
}

inline std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> load_coordinated_blocks(
    const std::string& path) {
    const nlohmann::json j = detail::parse_json(detail::read_file(path), path);
    if (!j.contains("blocks") || !j.at("blocks").is_array() || j.at("blocks").empty()) {
        throw ParseError(path + ": missing or empty \"blocks\" array");
    }
    std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> blocks;
    for (const nlohmann::json& entry : j.at("blocks")) {
        blocks.emplace_back(detail::matrix_from_json(entry, "a"),
                            detail::matrix_from_json(entry, "b"));
    }
    return blocks;
}

}  // namespace gainform
