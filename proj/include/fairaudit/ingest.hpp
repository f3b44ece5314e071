#pragma once
// Reading and writing decision and label files: delimited text with a header
// row, or line-delimited JSON objects with the same field names.

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "fairaudit/decision_core.hpp"
#include "fairaudit/errors.hpp"
#include "fairaudit/label_audit.hpp"

namespace fairaudit {

enum class NullPolicy : std::uint8_t { RejectRow, Fail };
enum class InputFormat : std::uint8_t { Auto, Csv, Jsonl };

struct IngestSchema {
    std::string score_column = "score";
    std::string outcome_column = "outcome";
    std::string label_column = "label";
    std::string truth_column = "truth";
    std::string labeler_column = "labeler";
    std::string item_column = "item";
    // Group dimensions; empty means every column that is not one of the above.
    std::vector<std::string> group_columns;
    NullPolicy null_policy = NullPolicy::RejectRow;
    double max_rejection_fraction = 0.01;
    InputFormat format = InputFormat::Auto;
    char delimiter = ',';
};

// Dimension used when a file has no group columns at all.
inline const GroupKey& default_group() {
    static const GroupKey key{{"group", "all"}};
    return key;
}

struct Rejection {
    std::size_t line = 0;
    std::string reason;
};

template <class Record>
struct IngestResult {
    std::vector<Record> records;
    std::size_t rows = 0;
    std::vector<Rejection> rejections;
    std::string digest;  // sha256 of the file bytes
};

// ---------------------------------------------------------------------------
// Low-level helpers

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string sha256_hex(std::string_view bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

// Writes via a sibling temporary file and rename, so readers never see a
// partially written file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw InputError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw InputError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

// Shortest decimal that reads back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::optional<bool> parse_binary(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    if (s == "0" || s == "false") return false;
    if (s == "1" || s == "true") return true;
    return std::nullopt;
}

inline bool is_null_token(std::string_view s) {
    return s.empty() || s == "NA" || s == "null" || s == "NULL" || s == "NaN" || s == "nan";
}

// One CSV record split into fields; quoted fields may contain delimiters,
// doubled quotes and newlines. Returns false at end of input.
inline bool next_csv_record(std::string_view text, std::size_t& pos, char delim, std::vector<std::string>& fields,
                            std::size_t& line) {
    fields.clear();
    if (pos >= text.size()) return false;
    std::string field;
    bool quoted = false;
    while (pos < text.size()) {
        const char ch = text[pos++];
        if (quoted) {
            if (ch == '"') {
                if (pos < text.size() && text[pos] == '"') {
                    field += '"';
                    ++pos;
                } else {
                    quoted = false;
                }
            } else {
                if (ch == '\n') ++line;
                field += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == delim) {
            fields.push_back(std::move(field));
            field.clear();
        } else if (ch == '\n') {
            ++line;
            break;
        } else if (ch != '\r') {
            field += ch;
        }
    }
    if (quoted) throw InputError("unterminated quoted field near line " + std::to_string(line));
    fields.push_back(std::move(field));
    return true;
}

inline std::string csv_escape(std::string_view s, char delim = ',') {
    if (s.find_first_of(std::string{delim, '"', '\n', '\r'}) == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

inline InputFormat resolve_format(const std::filesystem::path& path, InputFormat requested) {
    if (requested != InputFormat::Auto) return requested;
    const auto ext = path.extension().string();
    if (ext == ".jsonl" || ext == ".ndjson" || ext == ".json") return InputFormat::Jsonl;
    return InputFormat::Csv;
}

namespace detail {

// A row as named string cells, independent of the source format.
struct Row {
    std::size_t line = 0;
    std::vector<std::pair<std::string, std::optional<std::string>>> cells;  // nullopt: null

    const std::optional<std::string>* find(std::string_view name) const {
        for (const auto& [k, v] : cells)
            if (k == name) return &v;
        return nullptr;
    }
};

struct RowSource {
    std::vector<std::string> columns;
    std::vector<Row> rows;
};

inline RowSource read_csv_rows(std::string_view text, char delim) {
    RowSource src;
    std::size_t pos = 0, line = 1;
    std::vector<std::string> fields;
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;
    if (!next_csv_record(text, pos, delim, fields, line)) throw InputError("empty input: no header row");
    src.columns = fields;
    std::set<std::string> seen;
    for (const auto& c : src.columns)
        if (!seen.insert(c).second) throw InputError("duplicate column '" + c + "'");
    for (;;) {
        const std::size_t row_line = line;
        if (!next_csv_record(text, pos, delim, fields, line)) break;
        if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
        Row row;
        row.line = row_line;
        if (fields.size() != src.columns.size()) {
            row.cells.emplace_back("#arity", std::to_string(fields.size()));
        } else {
            for (std::size_t i = 0; i < fields.size(); ++i) {
                std::optional<std::string> v;
                if (!is_null_token(fields[i])) v = fields[i];
                row.cells.emplace_back(src.columns[i], std::move(v));
            }
        }
        src.rows.push_back(std::move(row));
    }
    return src;
}

inline RowSource read_jsonl_rows(std::string_view text) {
    RowSource src;
    std::size_t pos = 0, line = 0;
    std::set<std::string> seen;
    while (pos < text.size()) {
        const std::size_t nl = std::min(text.find('\n', pos), text.size());
        std::string_view raw = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line;
        while (!raw.empty() && (raw.back() == '\r' || raw.back() == ' ')) raw.remove_suffix(1);
        if (raw.empty()) continue;
        Row row;
        row.line = line;
        const auto obj = nlohmann::ordered_json::parse(raw, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            row.cells.emplace_back("#json", "line is not a JSON object");
            src.rows.push_back(std::move(row));
            continue;
        }
        for (const auto& [k, v] : obj.items()) {
            if (seen.insert(k).second) src.columns.push_back(k);
            std::optional<std::string> cell;
            if (v.is_string()) {
                cell = v.get<std::string>();
            } else if (v.is_boolean()) {
                cell = v.get<bool>() ? "1" : "0";
            } else if (v.is_number_integer()) {
                cell = std::to_string(v.get<long long>());
            } else if (v.is_number()) {
                cell = format_double(v.get<double>());
            } else if (!v.is_null()) {
                cell = v.dump();
            }
            row.cells.emplace_back(k, std::move(cell));
        }
        src.rows.push_back(std::move(row));
    }
    return src;
}

inline RowSource read_rows(const std::string& bytes, const std::filesystem::path& path, const IngestSchema& schema) {
    return resolve_format(path, schema.format) == InputFormat::Jsonl ? read_jsonl_rows(bytes)
                                                                     : read_csv_rows(bytes, schema.delimiter);
}

inline std::vector<std::string> group_columns(const RowSource& src, const IngestSchema& schema,
                                              const std::vector<std::string>& reserved) {
    if (!schema.group_columns.empty()) return schema.group_columns;
    std::vector<std::string> out;
    for (const auto& c : src.columns)
        if (std::find(reserved.begin(), reserved.end(), c) == reserved.end()) out.push_back(c);
    return out;
}

inline void require_columns(const RowSource& src, const std::vector<std::string>& names) {
    for (const auto& n : names) {
        if (std::find(src.columns.begin(), src.columns.end(), n) == src.columns.end())
            throw InputError("missing required column '" + n + "'");
    }
}

class RowError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline const std::string& cell(const Row& row, const std::string& name) {
    if (const auto* a = row.find("#arity")) throw RowError("row has " + **a + " fields, header has a different count");
    if (const auto* j = row.find("#json")) throw RowError(**j);
    const auto* v = row.find(name);
    if (!v || !*v) throw RowError("missing or null value in column '" + name + "'");
    return **v;
}

inline GroupKey row_group(const Row& row, const std::vector<std::string>& dims) {
    if (dims.empty()) return default_group();
    std::vector<GroupKey::Dimension> out;
    for (const auto& d : dims) out.emplace_back(d, cell(row, d));
    return GroupKey(std::move(out));
}

template <class Record, class Convert>
IngestResult<Record> ingest_rows(const std::filesystem::path& path, const IngestSchema& schema,
                                 const std::vector<std::string>& reserved, Convert convert) {
    if (!(schema.max_rejection_fraction >= 0.0 && schema.max_rejection_fraction <= 1.0))
        throw InputError("max rejection fraction must lie in [0, 1]");
    const std::string bytes = read_file(path);
    IngestResult<Record> out;
    out.digest = "sha256:" + sha256_hex(bytes);
    const RowSource src = read_rows(bytes, path, schema);
    if (src.rows.empty()) throw InputError(path.string() + ": no data rows");
    if (resolve_format(path, schema.format) == InputFormat::Csv) require_columns(src, reserved);
    const auto dims = group_columns(src, schema, reserved);
    if (resolve_format(path, schema.format) == InputFormat::Csv) require_columns(src, dims);

    out.rows = src.rows.size();
    out.records.reserve(src.rows.size());
    for (const auto& row : src.rows) {
        try {
            out.records.push_back(convert(row, row_group(row, dims)));
        } catch (const RowError& e) {
            if (schema.null_policy == NullPolicy::Fail)
                throw InputError(path.string() + ":" + std::to_string(row.line) + ": " + e.what());
            out.rejections.push_back({row.line, e.what()});
        }
    }
    const double fraction = static_cast<double>(out.rejections.size()) / static_cast<double>(out.rows);
    if (fraction > schema.max_rejection_fraction) {
        throw InputError(path.string() + ": rejected " + std::to_string(out.rejections.size()) + " of " +
                         std::to_string(out.rows) + " rows, above the cap of " +
                         format_double(schema.max_rejection_fraction) +
                         (out.rejections.empty() ? "" : "; first: line " + std::to_string(out.rejections[0].line) +
                                                            ": " + out.rejections[0].reason));
    }
    return out;
}

inline double parse_score_cell(const Row& row, const std::string& col) {
    const auto v = parse_double(cell(row, col));
    if (!v) throw RowError("column '" + col + "': '" + cell(row, col) + "' is not a finite decimal");
    return *v;
}

inline bool parse_binary_cell(const Row& row, const std::string& col) {
    const auto v = parse_binary(cell(row, col));
    if (!v) throw RowError("column '" + col + "': '" + cell(row, col) + "' is not 0 or 1");
    return *v;
}

}  // namespace detail

inline IngestResult<DecisionRecord> ingest_decisions(const std::filesystem::path& path, const IngestSchema& schema) {
    const std::vector<std::string> reserved{schema.score_column, schema.outcome_column};
    return detail::ingest_rows<DecisionRecord>(path, schema, reserved, [&](const detail::Row& row, GroupKey group) {
        return DecisionRecord{detail::parse_score_cell(row, schema.score_column),
                              detail::parse_binary_cell(row, schema.outcome_column), std::move(group)};
    });
}

inline IngestResult<LabelRecord> ingest_labels(const std::filesystem::path& path, const IngestSchema& schema) {
    const std::vector<std::string> reserved{schema.label_column, schema.truth_column, schema.labeler_column,
                                            schema.item_column};
    return detail::ingest_rows<LabelRecord>(path, schema, reserved, [&](const detail::Row& row, GroupKey group) {
        return LabelRecord{detail::parse_binary_cell(row, schema.label_column),
                           detail::parse_binary_cell(row, schema.truth_column),
                           detail::cell(row, schema.labeler_column), detail::cell(row, schema.item_column),
                           std::move(group)};
    });
}

// ---------------------------------------------------------------------------
// Writers. Group columns follow the dimension order of the first record.

namespace detail {

inline std::vector<std::string> dimension_names(const GroupKey& key) {
    std::vector<std::string> out;
    for (const auto& d : key.dimensions()) out.push_back(d.first);
    return out;
}

}  // namespace detail

inline std::string decisions_to_csv(std::span<const DecisionRecord> records) {
    const auto dims = records.empty() ? std::vector<std::string>{} : detail::dimension_names(records[0].group);
    std::string out = "score,outcome";
    for (const auto& d : dims) out += "," + csv_escape(d);
    out += '\n';
    for (const auto& r : records) {
        out += format_double(r.score);
        out += r.outcome ? ",1" : ",0";
        for (const auto& d : dims) out += "," + csv_escape(r.group.at(d));
        out += '\n';
    }
    return out;
}

inline std::string labels_to_csv(std::span<const LabelRecord> records) {
    const auto dims = records.empty() ? std::vector<std::string>{} : detail::dimension_names(records[0].group);
    std::string out = "label,truth,labeler,item";
    for (const auto& d : dims) out += "," + csv_escape(d);
    out += '\n';
    for (const auto& r : records) {
        out += r.label ? "1," : "0,";
        out += r.truth ? "1," : "0,";
        out += csv_escape(r.labeler) + "," + csv_escape(r.item);
        for (const auto& d : dims) out += "," + csv_escape(r.group.at(d));
        out += '\n';
    }
    return out;
}

inline std::string decisions_to_jsonl(std::span<const DecisionRecord> records) {
    std::string out;
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["score"] = r.score;
        j["outcome"] = r.outcome ? 1 : 0;
        for (const auto& [k, v] : r.group.dimensions()) j[k] = v;
        out += j.dump();
        out += '\n';
    }
    return out;
}

inline std::string labels_to_jsonl(std::span<const LabelRecord> records) {
    std::string out;
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["label"] = r.label ? 1 : 0;
        j["truth"] = r.truth ? 1 : 0;
        j["labeler"] = r.labeler;
        j["item"] = r.item;
        for (const auto& [k, v] : r.group.dimensions()) j[k] = v;
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace fairaudit
