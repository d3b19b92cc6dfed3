#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "chamberlens/error.hpp"

namespace chamberlens {

struct TweetRecord {
    std::string tweet_id;
    std::string user_id;
    std::string text;
    std::optional<std::string> created_at;
    std::optional<std::string> reply_to_user_id;

    bool operator==(const TweetRecord&) const = default;
};

enum class DatasetFormat { csv, jsonl };

inline DatasetFormat parse_format(std::string_view name) {
    if (name == "csv") {
        return DatasetFormat::csv;
    }
    if (name == "jsonl") {
        return DatasetFormat::jsonl;
    }
    throw ValidationError("unknown dataset format '" + std::string(name) + "' (expected csv or jsonl)");
}

/// CSV header names for each record field. Defaults follow the public
/// vaccination tweet dump.
struct ColumnMapping {
    std::string tweet_id = "id";
    std::string user_id = "user_id";
    std::string text = "text";
    std::string created_at = "date";
    std::string reply_to_user_id = "reply_to";
};

struct ParseStats {
    std::size_t rows = 0;
    std::size_t skipped = 0;
    std::size_t duplicates = 0;
};

struct ParsedDataset {
    std::vector<TweetRecord> records;
    ParseStats stats;
};

namespace detail {

// RFC 4180 reader: quoted fields, doubled quotes, embedded newlines.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    bool next_row(std::vector<std::string>& row) {
        row.clear();
        if (in_.peek() == std::char_traits<char>::eof()) {
            return false;
        }
        std::string field;
        bool quoted = false;
        bool any = false;
        char c = 0;
        while (in_.get(c)) {
            any = true;
            if (quoted) {
                if (c == '"') {
                    if (in_.peek() == '"') {
                        in_.get(c);
                        field.push_back('"');
                    } else {
                        quoted = false;
                    }
                } else {
                    field.push_back(c);
                }
                continue;
            }
            if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                row.push_back(std::move(field));
                field.clear();
            } else if (c == '\n') {
                break;
            } else if (c == '\r') {
                if (in_.peek() == '\n') {
                    in_.get(c);
                }
                break;
            } else {
                field.push_back(c);
            }
        }
        if (quoted) {
            throw FormatError("unterminated quoted CSV field");
        }
        row.push_back(std::move(field));
        return any;
    }

private:
    std::istream& in_;
};

inline std::optional<std::string> non_empty(std::string s) {
    if (s.empty()) {
        return std::nullopt;
    }
    return s;
}

// The public dump stores reply targets as a Python-literal list of dicts,
// e.g. "[{'user_id': '123', 'username': 'x'}]". Plain ids pass through.
inline std::optional<std::string> reply_target_from_cell(const std::string& cell) {
    const auto first = cell.find_first_not_of(" \t");
    if (first == std::string::npos) {
        return std::nullopt;
    }
    if (cell[first] != '[') {
        return cell;
    }
    const auto key = cell.find("user_id");
    if (key == std::string::npos) {
        return std::nullopt;
    }
    auto pos = cell.find(':', key);
    if (pos == std::string::npos) {
        return std::nullopt;
    }
    pos = cell.find_first_not_of(" \t'\"", pos + 1);
    if (pos == std::string::npos) {
        return std::nullopt;
    }
    const auto end = cell.find_first_of("'\",}", pos);
    return non_empty(cell.substr(pos, end == std::string::npos ? std::string::npos : end - pos));
}

inline std::optional<std::string> json_string(const nlohmann::json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return std::nullopt;
    }
    if (it->is_string()) {
        return non_empty(it->get<std::string>());
    }
    if (it->is_number_integer() || it->is_number_unsigned()) {
        return it->dump();
    }
    return std::nullopt;
}

inline bool is_valid(const TweetRecord& r) {
    return !r.tweet_id.empty() && !r.user_id.empty();
}

// Last occurrence of each tweet_id wins; survivors stay in file order.
inline ParsedDataset finish(std::vector<TweetRecord> rows, ParseStats stats) {
    std::unordered_map<std::string, std::size_t> last;
    last.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        last[rows[i].tweet_id] = i;
    }
    ParsedDataset out;
    out.records.reserve(last.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (last[rows[i].tweet_id] == i) {
            out.records.push_back(std::move(rows[i]));
        } else {
            ++stats.duplicates;
        }
    }
    out.stats = stats;
    if (stats.rows > 0 && 2 * stats.skipped > stats.rows) {
        throw ValidationError("skipped " + std::to_string(stats.skipped) + " of " +
                              std::to_string(stats.rows) + " rows; check the column mapping");
    }
    return out;
}

inline ParsedDataset parse_csv(std::istream& in, const ColumnMapping& cols) {
    CsvReader reader(in);
    std::vector<std::string> header;
    if (!reader.next_row(header)) {
        throw FormatError("CSV input has no header row");
    }
    if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) {
        header[0].erase(0, 3);
    }
    auto column = [&](const std::string& name, bool required) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return i;
            }
        }
        if (required) {
            throw FormatError("CSV header lacks required column '" + name + "'");
        }
        return std::nullopt;
    };
    const auto id_col = *column(cols.tweet_id, true);
    const auto user_col = *column(cols.user_id, true);
    const auto text_col = *column(cols.text, true);
    const auto date_col = column(cols.created_at, false);
    const auto reply_col = column(cols.reply_to_user_id, false);

    ParseStats stats;
    std::vector<TweetRecord> rows;
    std::vector<std::string> row;
    while (reader.next_row(row)) {
        if (row.size() == 1 && row[0].empty()) {
            continue; // blank line
        }
        ++stats.rows;
        auto cell = [&](std::optional<std::size_t> c) -> std::string {
            return c && *c < row.size() ? row[*c] : std::string{};
        };
        TweetRecord r{cell(id_col), cell(user_col), cell(text_col), non_empty(cell(date_col)),
                      reply_target_from_cell(cell(reply_col))};
        if (!is_valid(r)) {
            ++stats.skipped;
            continue;
        }
        rows.push_back(std::move(r));
    }
    return finish(std::move(rows), stats);
}

inline ParsedDataset parse_jsonl(std::istream& in) {
    ParseStats stats;
    std::vector<TweetRecord> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        ++stats.rows;
        const auto obj = nlohmann::json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            ++stats.skipped;
            continue;
        }
        TweetRecord r;
        r.tweet_id = json_string(obj, "tweet_id").value_or("");
        r.user_id = json_string(obj, "user_id").value_or("");
        if (const auto it = obj.find("text"); it != obj.end() && it->is_string()) {
            r.text = it->get<std::string>();
        }
        r.created_at = json_string(obj, "created_at");
        r.reply_to_user_id = json_string(obj, "reply_to_user_id");
        if (!is_valid(r)) {
            ++stats.skipped;
            continue;
        }
        rows.push_back(std::move(r));
    }
    return finish(std::move(rows), stats);
}

} // namespace detail

inline ParsedDataset parse_dataset(std::istream& in, DatasetFormat format,
                                   const ColumnMapping& cols = {}) {
    return format == DatasetFormat::csv ? detail::parse_csv(in, cols) : detail::parse_jsonl(in);
}

/// Reads a tweet dataset. Rows without tweet_id or user_id are skipped and
/// counted; repeated tweet_ids keep the last occurrence. More than half the
/// rows skipped is treated as a wrong column mapping and rejected.
inline ParsedDataset parse_dataset(const std::filesystem::path& path, DatasetFormat format,
                                   const ColumnMapping& cols = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    return parse_dataset(in, format, cols);
}

inline nlohmann::ordered_json to_json(const TweetRecord& r) {
    nlohmann::ordered_json j;
    j["tweet_id"] = r.tweet_id;
    j["user_id"] = r.user_id;
    j["text"] = r.text;
    j["created_at"] = r.created_at ? nlohmann::ordered_json(*r.created_at) : nlohmann::ordered_json();
    j["reply_to_user_id"] = r.reply_to_user_id ? nlohmann::ordered_json(*r.reply_to_user_id) : nlohmann::ordered_json();
    return j;
}

inline void write_tweets_jsonl(const std::vector<TweetRecord>& records, std::ostream& out) {
    for (const auto& r : records) {
        out << to_json(r).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    }
}

inline void write_tweets_jsonl(const std::vector<TweetRecord>& records,
                               const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    write_tweets_jsonl(records, out);
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

} // namespace chamberlens
