#pragma once

// trials.csv: one row per started trial.
//
//   trial_index,generator,<param names in space order>,objective,sem,status,elapsed_ms
//
// Reals use 17 significant digits so every double round-trips exactly.
// Strings containing a comma, quote or newline are quoted RFC 4180 style.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hpbo/errors.hpp"
#include "hpbo/loop.hpp"
#include "hpbo/space.hpp"

namespace hpbo::cli {

struct TrialLogRecord {
    std::size_t trial_index = 0;
    std::string generator;
    std::vector<Value> values;  // space order
    std::optional<double> objective;
    std::optional<double> sem;
    std::string status;
    std::int64_t elapsed_ms = 0;

    bool operator==(const TrialLogRecord&) const = default;
};

class TrialLogError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::vector<std::string> trial_log_columns(const SearchSpace& space) {
    std::vector<std::string> cols = {"trial_index", "generator"};
    for (const auto& p : space.params()) cols.push_back(p.name);
    for (const char* c : {"objective", "sem", "status", "elapsed_ms"}) cols.emplace_back(c);
    return cols;
}

inline std::vector<TrialLogRecord> trial_records(const Experiment& exp) {
    std::vector<TrialLogRecord> out;
    for (const auto& t : exp.trials()) {
        TrialLogRecord r;
        r.trial_index = t.index;
        r.generator = to_string(t.generator);
        for (const auto& p : exp.space().params()) {
            Value v = t.arm.values.at(p.name);
            if (p.kind == ParameterKind::range_float) v = *as_number(v);
            r.values.push_back(std::move(v));
        }
        if (t.status == TrialStatus::completed && t.observation) {
            r.objective = t.observation->objective;
            r.sem = t.observation->sem;
        }
        r.status = to_string(t.status);
        r.elapsed_ms = t.elapsed_ms;
        out.push_back(std::move(r));
    }
    return out;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string real(double x) { return to_string(Value{x}); }

/// Splits CSV text into rows of unquoted fields.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) throw TrialLogError("unterminated quoted field");
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline double parse_real(const std::string& s, const std::string& what) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) throw TrialLogError("bad real in column " + what + ": \"" + s + "\"");
    return v;
}

inline std::int64_t parse_int(const std::string& s, const std::string& what) {
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size()) throw TrialLogError("bad integer in column " + what + ": \"" + s + "\"");
    return v;
}

inline Value parse_value(const ParameterSpec& p, const std::string& cell) {
    switch (p.kind) {
    case ParameterKind::range_float: return parse_real(cell, p.name);
    case ParameterKind::range_int: return parse_int(cell, p.name);
    case ParameterKind::choice:
        for (const auto& o : p.options)
            if (to_string(o) == cell) return o;
        throw TrialLogError("value \"" + cell + "\" is not an option of " + p.name);
    case ParameterKind::fixed:
        if (to_string(p.value) != cell) throw TrialLogError("value \"" + cell + "\" differs from fixed " + p.name);
        return p.value;
    }
    throw TrialLogError("unknown parameter kind");
}

}  // namespace detail

inline std::string render_trial_log(const SearchSpace& space, const std::vector<TrialLogRecord>& records) {
    std::ostringstream os;
    const auto cols = trial_log_columns(space);
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << detail::csv_field(cols[i]);
    os << "\n";
    for (const auto& r : records) {
        os << r.trial_index << "," << r.generator;
        for (const auto& v : r.values) os << "," << detail::csv_field(to_string(v));
        os << "," << (r.objective ? detail::real(*r.objective) : "");
        os << "," << (r.sem ? detail::real(*r.sem) : "");
        os << "," << r.status << "," << r.elapsed_ms << "\n";
    }
    return os.str();
}

inline void write_trial_log(const Experiment& exp, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw TrialLogError("cannot open " + path.string() + " for writing");
    out << render_trial_log(exp.space(), trial_records(exp));
    if (!out.flush()) throw TrialLogError("write failed: " + path.string());
}

inline std::vector<TrialLogRecord> parse_trial_log(const std::string& text, const SearchSpace& space) {
    const auto rows = detail::parse_csv(text);
    const auto cols = trial_log_columns(space);
    if (rows.empty() || rows[0] != cols) throw TrialLogError("header does not match the search space");
    std::vector<TrialLogRecord> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != cols.size())
            throw TrialLogError("row " + std::to_string(i) + " has " + std::to_string(row.size()) + " fields, expected " +
                                std::to_string(cols.size()));
        TrialLogRecord r;
        r.trial_index = static_cast<std::size_t>(detail::parse_int(row[0], "trial_index"));
        r.generator = row[1];
        std::size_t c = 2;
        for (const auto& p : space.params()) r.values.push_back(detail::parse_value(p, row[c++]));
        if (!row[c].empty()) r.objective = detail::parse_real(row[c], "objective");
        ++c;
        if (!row[c].empty()) r.sem = detail::parse_real(row[c], "sem");
        ++c;
        r.status = row[c++];
        r.elapsed_ms = detail::parse_int(row[c], "elapsed_ms");
        out.push_back(std::move(r));
    }
    return out;
}

/// Reads trials.csv back; the space supplies column types.
inline std::vector<TrialLogRecord> read_trial_log(const std::filesystem::path& path, const SearchSpace& space) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TrialLogError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_trial_log(ss.str(), space);
    } catch (const TrialLogError& e) {
        throw TrialLogError(path.string() + ": " + e.what());
    }
}

}  // namespace hpbo::cli
