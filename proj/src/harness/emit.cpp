#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "fieldslab/harness.hpp"

namespace fieldslab {

void Table::add_row(std::vector<Cell> row) {
    if (row.size() != columns.size())
        throw std::invalid_argument("table " + name + ": row has " + std::to_string(row.size()) + " cells, expected " +
                                    std::to_string(columns.size()));
    rows.push_back(std::move(row));
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string cell_text(const Cell& c) {
    if (auto i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
    if (auto d = std::get_if<double>(&c)) return format_double(*d);
    return csv_escape(std::get<std::string>(c));
}

}  // namespace

std::string to_csv(const Table& t) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + csv_escape(t.columns[i]);
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + cell_text(row[i]);
        out += '\n';
    }
    return out;
}

// nlohmann serializes doubles with the shortest representation that
// round-trips, which is never longer than 17 significant digits.  Non-finite
// values become strings so they survive the trip.
nlohmann::json to_json(const Table& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : t.rows) {
        nlohmann::json r = nlohmann::json::array();
        for (const auto& c : row) {
            if (auto i = std::get_if<std::int64_t>(&c)) r.push_back(*i);
            else if (auto d = std::get_if<double>(&c)) {
                if (std::isfinite(*d)) r.push_back(*d);
                else r.push_back({{"float", format_double(*d)}});
            } else r.push_back(std::get<std::string>(c));
        }
        rows.push_back(std::move(r));
    }
    return {{"name", t.name}, {"columns", t.columns}, {"rows", rows}};
}

Table table_from_json(const nlohmann::json& j) {
    Table t;
    t.name = j.at("name").get<std::string>();
    t.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& r : j.at("rows")) {
        std::vector<Cell> row;
        for (const auto& c : r) {
            if (c.is_number_integer()) row.emplace_back(c.get<std::int64_t>());
            else if (c.is_number_float()) row.emplace_back(c.get<double>());
            else if (c.is_object()) row.emplace_back(std::stod(c.at("float").get<std::string>()));
            else row.emplace_back(c.get<std::string>());
        }
        t.add_row(std::move(row));
    }
    return t;
}

Format parse_format(const std::string& s) {
    if (s == "csv") return Format::csv;
    if (s == "json") return Format::json;
    throw ConfigError("unknown format '" + s + "' (csv or json)");
}

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
    out << text;
    if (!out.good()) throw std::runtime_error("write failed for '" + p.string() + "'");
}

}  // namespace

void emit(const std::vector<Table>& tables, const Meta& meta, const std::filesystem::path& dir, Format fmt) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(meta.config_hash));
    nlohmann::json m = {{"version", kVersion},
                        {"command", meta.command},
                        {"seed", meta.seed},
                        {"config_hash", hash},
                        {"config", meta.config},
                        {"tables", nlohmann::json::array()}};
    for (const auto& t : tables) {
        const std::string file = t.name + (fmt == Format::csv ? ".csv" : ".json");
        if (fmt == Format::csv) write_file(dir / file, to_csv(t));
        else {
            nlohmann::json j = to_json(t);
            j["meta"] = {{"version", kVersion}, {"seed", meta.seed}, {"config_hash", hash}};
            write_file(dir / file, j.dump(1) + "\n");
        }
        m["tables"].push_back(file);
    }
    write_file(dir / "meta.json", m.dump(2) + "\n");
}

}  // namespace fieldslab
