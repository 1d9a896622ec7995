#pragma once

// File formats: JSON configs with located parse errors, CSV/JSON tables with
// provenance headers, and atomic output writes.

#include "cavityq/control.hpp"
#include "cavityq/device.hpp"
#include "cavityq/gates.hpp"
#include "cavityq/qst.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cavityq::io {

inline constexpr std::string_view kToolName = "cavityq";
inline constexpr std::string_view kToolVersion = "0.1.0";

using Json = nlohmann::json;

// A parsed document that remembers where every value sits in the source.
// Locations are addressed by JSON pointer ("" is the root, "/gates/2/kind").
class JsonDocument {
public:
    JsonDocument(std::string text, std::string source);

    const Json& root() const { return root_; }
    const std::string& source() const { return source_; }
    const std::string& text() const { return text_; }

    // "source:line:column" for the value at pointer, or just the source
    // when the pointer is unknown.
    std::string where(const std::string& pointer) const;

    // Throws a parse error naming the location and the field.
    [[noreturn]] void fail_at(const std::string& pointer, const std::string& message) const;

private:
    std::string text_;
    std::string source_;
    Json root_;
    std::map<std::string, std::size_t> offsets_;
};

std::string read_file(const std::filesystem::path& path);
JsonDocument load_json(const std::filesystem::path& path);

// Typed field access. `object` is the pointer of the enclosing object.
class Reader {
public:
    explicit Reader(const JsonDocument& doc) : doc_(&doc) {}

    const JsonDocument& doc() const { return *doc_; }
    const Json& at(const std::string& pointer) const;
    bool has(const std::string& object, const std::string& field) const;

    double number(const std::string& object, const std::string& field) const;
    double number_or(const std::string& object, const std::string& field, double fallback) const;
    std::uint64_t unsigned_integer(const std::string& object, const std::string& field) const;
    std::uint64_t unsigned_or(const std::string& object, const std::string& field, std::uint64_t fallback) const;
    bool boolean_or(const std::string& object, const std::string& field, bool fallback) const;
    std::string string(const std::string& object, const std::string& field) const;
    std::string string_or(const std::string& object, const std::string& field, const std::string& fallback) const;
    cplx complex(const std::string& object, const std::string& field) const;  // [re, im]
    std::vector<double> numbers(const std::string& object, const std::string& field) const;
    std::vector<std::uint64_t> unsigned_list(const std::string& object, const std::string& field) const;
    std::vector<cplx> complex_list(const std::string& object, const std::string& field) const;

    // Parse error for unexpected keys in an object.
    void only_fields(const std::string& object, std::initializer_list<std::string_view> allowed) const;

private:
    const JsonDocument* doc_;
};

std::string child(const std::string& object, const std::string& field);
std::string child(const std::string& array, std::size_t index);

// ---------------------------------------------------------------------------
// Domain formats

DeviceParams device_from_json(const Reader& r, const std::string& object);
Json device_to_json(const DeviceParams& p);

GateSpec gate_from_json(const Reader& r, const std::string& object);
Json gate_to_json(const GateSpec& g);
Circuit circuit_from_json(const Reader& r, const std::string& object);
Json circuit_to_json(const Circuit& c);

PulseSchedule schedule_from_json(const Reader& r, const std::string& object);
Json schedule_to_json(const PulseSchedule& s);

Waveform waveform_from_json(const Reader& r, const std::string& object);
Json waveform_to_json(const Waveform& w);

// ---------------------------------------------------------------------------
// Outputs

std::string sha256_hex(std::string_view data);

struct Provenance {
    std::string command;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> inputs;  // (name, sha256)
};

// Shortest text that reads back to the same double.
std::string format_number(double v);

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

// CSV with '#' comment lines for the provenance, then the header row.
std::string format_csv(const Table& table, const Provenance& prov);
// {"meta": {...}, "columns": [...], "rows": [[...], ...]}
std::string format_table_json(const Table& table, const Provenance& prov);
// A JSON object document with a "meta" member added.
std::string format_json(Json doc, const Provenance& prov);
Json meta_json(const Provenance& prov);

// Writes through a temporary file in the same directory and renames it.
void write_atomic(const std::filesystem::path& path, std::string_view content);

} // namespace cavityq::io
