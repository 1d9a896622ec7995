#include "cavityq/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace cavityq::io {

namespace {

// Character iterator that counts how far the parser has read.
struct CountingIterator {
    using iterator_category = std::input_iterator_tag;
    using value_type = char;
    using difference_type = std::ptrdiff_t;
    using pointer = const char*;
    using reference = const char&;

    const char* p = nullptr;
    std::size_t* consumed = nullptr;

    reference operator*() const { return *p; }
    CountingIterator& operator++() {
        ++p;
        ++*consumed;
        return *this;
    }
    CountingIterator operator++(int) {
        CountingIterator old = *this;
        ++*this;
        return old;
    }
    bool operator==(const CountingIterator& o) const { return p == o.p; }
    bool operator!=(const CountingIterator& o) const { return p != o.p; }
};

std::string escape_pointer_token(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '~') out += "~0";
        else if (c == '/') out += "~1";
        else out += c;
    }
    return out;
}

// DOM builder that records the source offset at which every value starts.
class LocatingParser : public nlohmann::detail::json_sax_dom_parser<Json> {
public:
    using Base = nlohmann::detail::json_sax_dom_parser<Json>;

    LocatingParser(Json& root, const std::string* text, const std::size_t* consumed,
                   std::map<std::string, std::size_t>* offsets)
        : Base(root, true), text_(text), consumed_(consumed), offsets_(offsets) {}

    bool null() { return scalar([&] { return Base::null(); }); }
    bool boolean(bool v) { return scalar([&] { return Base::boolean(v); }); }
    bool number_integer(number_integer_t v) { return scalar([&] { return Base::number_integer(v); }); }
    bool number_unsigned(number_unsigned_t v) { return scalar([&] { return Base::number_unsigned(v); }); }
    bool number_float(number_float_t v, const string_t& s) { return scalar([&] { return Base::number_float(v, s); }); }
    bool string(string_t& v) { return scalar([&] { return Base::string(v); }); }
    bool binary(binary_t& v) { return scalar([&] { return Base::binary(v); }); }

    bool start_object(std::size_t n) {
        open();
        frames_.push_back({false, 0, {}});
        return Base::start_object(n);
    }
    bool key(string_t& k) {
        last_end_ = *consumed_;
        frames_.back().key = k;
        return Base::key(k);
    }
    bool end_object() {
        last_end_ = *consumed_;
        frames_.pop_back();
        advance();
        return Base::end_object();
    }
    bool start_array(std::size_t n) {
        open();
        frames_.push_back({true, 0, {}});
        return Base::start_array(n);
    }
    bool end_array() {
        last_end_ = *consumed_;
        frames_.pop_back();
        advance();
        return Base::end_array();
    }

private:
    struct Frame {
        bool array;
        std::size_t index;
        std::string key;
    };

    static bool separator(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == ',' || c == ':'; }

    // Only whitespace and punctuation separate the previous token from a
    // scalar, and number tokens are followed by one character of lookahead.
    template <class F>
    bool scalar(F&& f) {
        std::size_t start = last_end_;
        while (start < text_->size() && (separator((*text_)[start]) || (*text_)[start] == '[')) ++start;
        record(start);
        std::size_t end = std::min(*consumed_, text_->size());
        while (end > start && (separator((*text_)[end - 1]) || (*text_)[end - 1] == ']' || (*text_)[end - 1] == '}')) --end;
        last_end_ = end;
        advance();
        return f();
    }
    void open() {
        record(*consumed_ - 1);
        last_end_ = *consumed_;
    }
    void record(std::size_t offset) {
        std::string ptr;
        for (const auto& fr : frames_) ptr += "/" + (fr.array ? std::to_string(fr.index) : escape_pointer_token(fr.key));
        (*offsets_)[ptr] = offset;
    }
    void advance() {
        if (!frames_.empty() && frames_.back().array) ++frames_.back().index;
    }

    const std::string* text_;
    const std::size_t* consumed_;
    std::size_t last_end_ = 0;
    std::map<std::string, std::size_t>* offsets_;
    std::vector<Frame> frames_;
};

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
    offset = std::min(offset, text.size());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

std::string describe(const Json& j) {
    switch (j.type()) {
    case Json::value_t::null: return "null";
    case Json::value_t::boolean: return "a boolean";
    case Json::value_t::string: return "a string";
    case Json::value_t::array: return "an array";
    case Json::value_t::object: return "an object";
    default: return "a number";
    }
}

} // namespace

JsonDocument::JsonDocument(std::string text, std::string source) : text_(std::move(text)), source_(std::move(source)) {
    std::size_t consumed = 0;
    LocatingParser sax(root_, &text_, &consumed, &offsets_);
    const CountingIterator first{text_.data(), &consumed};
    const CountingIterator last{text_.data() + text_.size(), &consumed};
    try {
        Json::sax_parse(first, last, &sax);
    } catch (const Json::parse_error& e) {
        const auto [line, col] = line_column(text_, e.byte == 0 ? 0 : e.byte - 1);
        std::string msg = e.what();
        // Drop the library's "[json.exception.parse_error.101] " prefix.
        if (const auto p = msg.find("] "); p != std::string::npos) msg = msg.substr(p + 2);
        fail(ErrorKind::Parse, source_ + ":" + std::to_string(line) + ":" + std::to_string(col) + ": invalid JSON: " + msg);
    }
}

std::string JsonDocument::where(const std::string& pointer) const {
    const auto it = offsets_.find(pointer);
    if (it == offsets_.end()) return source_;
    const auto [line, col] = line_column(text_, it->second);
    return source_ + ":" + std::to_string(line) + ":" + std::to_string(col);
}

void JsonDocument::fail_at(const std::string& pointer, const std::string& message) const {
    fail(ErrorKind::Parse, where(pointer) + ": " + (pointer.empty() ? std::string("(root)") : pointer) + ": " + message);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Usage, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

JsonDocument load_json(const std::filesystem::path& path) { return JsonDocument(read_file(path), path.string()); }

std::string child(const std::string& object, const std::string& field) { return object + "/" + escape_pointer_token(field); }
std::string child(const std::string& array, std::size_t index) { return array + "/" + std::to_string(index); }

// ---------------------------------------------------------------------------

const Json& Reader::at(const std::string& pointer) const {
    try {
        return doc_->root().at(Json::json_pointer(pointer));
    } catch (const Json::exception&) {
        doc_->fail_at(pointer, "missing value");
    }
}

bool Reader::has(const std::string& object, const std::string& field) const {
    const Json& o = at(object);
    return o.is_object() && o.contains(field);
}

namespace {

const Json& field_value(const Reader& r, const std::string& object, const std::string& field) {
    const Json& o = r.at(object);
    if (!o.is_object()) r.doc().fail_at(object, "expected an object, found " + describe(o));
    if (!o.contains(field)) r.doc().fail_at(object, "missing field '" + field + "'");
    return o.at(field);
}

double as_number(const Reader& r, const Json& v, const std::string& ptr) {
    if (!v.is_number()) r.doc().fail_at(ptr, "expected a number, found " + describe(v));
    const double d = v.get<double>();
    if (!std::isfinite(d)) r.doc().fail_at(ptr, "number is not finite");
    return d;
}

std::uint64_t as_unsigned(const Reader& r, const Json& v, const std::string& ptr) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    r.doc().fail_at(ptr, "expected a non-negative integer, found " + (v.is_number() ? v.dump() : describe(v)));
}

cplx as_complex(const Reader& r, const Json& v, const std::string& ptr) {
    if (v.is_number()) return as_number(r, v, ptr);
    if (!v.is_array() || v.size() != 2) r.doc().fail_at(ptr, "expected [re, im]");
    return {as_number(r, v[0], child(ptr, 0)), as_number(r, v[1], child(ptr, 1))};
}

const Json& as_array(const Reader& r, const Json& v, const std::string& ptr) {
    if (!v.is_array()) r.doc().fail_at(ptr, "expected an array, found " + describe(v));
    return v;
}

} // namespace

double Reader::number(const std::string& object, const std::string& field) const {
    return as_number(*this, field_value(*this, object, field), child(object, field));
}

double Reader::number_or(const std::string& object, const std::string& field, double fallback) const {
    return has(object, field) ? number(object, field) : fallback;
}

std::uint64_t Reader::unsigned_integer(const std::string& object, const std::string& field) const {
    return as_unsigned(*this, field_value(*this, object, field), child(object, field));
}

std::uint64_t Reader::unsigned_or(const std::string& object, const std::string& field, std::uint64_t fallback) const {
    return has(object, field) ? unsigned_integer(object, field) : fallback;
}

bool Reader::boolean_or(const std::string& object, const std::string& field, bool fallback) const {
    if (!has(object, field)) return fallback;
    const Json& v = field_value(*this, object, field);
    if (!v.is_boolean()) doc_->fail_at(child(object, field), "expected a boolean, found " + describe(v));
    return v.get<bool>();
}

std::string Reader::string(const std::string& object, const std::string& field) const {
    const Json& v = field_value(*this, object, field);
    if (!v.is_string()) doc_->fail_at(child(object, field), "expected a string, found " + describe(v));
    return v.get<std::string>();
}

std::string Reader::string_or(const std::string& object, const std::string& field, const std::string& fallback) const {
    return has(object, field) ? string(object, field) : fallback;
}

cplx Reader::complex(const std::string& object, const std::string& field) const {
    return as_complex(*this, field_value(*this, object, field), child(object, field));
}

std::vector<double> Reader::numbers(const std::string& object, const std::string& field) const {
    const std::string ptr = child(object, field);
    const Json& a = as_array(*this, field_value(*this, object, field), ptr);
    std::vector<double> out;
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(as_number(*this, a[i], child(ptr, i)));
    return out;
}

std::vector<std::uint64_t> Reader::unsigned_list(const std::string& object, const std::string& field) const {
    const std::string ptr = child(object, field);
    const Json& a = as_array(*this, field_value(*this, object, field), ptr);
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(as_unsigned(*this, a[i], child(ptr, i)));
    return out;
}

std::vector<cplx> Reader::complex_list(const std::string& object, const std::string& field) const {
    const std::string ptr = child(object, field);
    const Json& a = as_array(*this, field_value(*this, object, field), ptr);
    std::vector<cplx> out;
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(as_complex(*this, a[i], child(ptr, i)));
    return out;
}

void Reader::only_fields(const std::string& object, std::initializer_list<std::string_view> allowed) const {
    const Json& o = at(object);
    if (!o.is_object()) doc_->fail_at(object, "expected an object, found " + describe(o));
    for (const auto& [k, v] : o.items()) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
            doc_->fail_at(child(object, k), "unknown field '" + k + "'");
        }
    }
}

// ---------------------------------------------------------------------------

DeviceParams device_from_json(const Reader& r, const std::string& o) {
    r.only_fields(o, {"omega_q_hz", "omega_c_hz", "g_hz", "chi_prime_hz", "alpha_hz", "t1_fock0_s", "t1_min_s"});
    DeviceParams p;
    p.omega_q_hz = r.number(o, "omega_q_hz");
    p.omega_c_hz = r.number(o, "omega_c_hz");
    p.g_hz = r.number(o, "g_hz");
    p.chi_prime_hz = r.number(o, "chi_prime_hz");
    p.alpha_hz = r.number(o, "alpha_hz");
    p.t1_fock0_s = r.number(o, "t1_fock0_s");
    p.t1_min_s = r.number(o, "t1_min_s");
    try {
        validate(p);
    } catch (const Error& e) {
        r.doc().fail_at(o, e.what());
    }
    return p;
}

Json device_to_json(const DeviceParams& p) {
    return Json{{"omega_q_hz", p.omega_q_hz}, {"omega_c_hz", p.omega_c_hz}, {"g_hz", p.g_hz},
                {"chi_prime_hz", p.chi_prime_hz}, {"alpha_hz", p.alpha_hz}, {"t1_fock0_s", p.t1_fock0_s},
                {"t1_min_s", p.t1_min_s}};
}

namespace {

Json complex_json(cplx z) { return Json::array({z.real(), z.imag()}); }

std::size_t index_or(const Reader& r, const std::string& o, const char* field, std::size_t fallback) {
    return static_cast<std::size_t>(r.unsigned_or(o, field, fallback));
}

std::size_t index(const Reader& r, const std::string& o, const char* field) {
    return static_cast<std::size_t>(r.unsigned_integer(o, field));
}

} // namespace

GateSpec gate_from_json(const Reader& r, const std::string& o) {
    const std::string kind = r.string(o, "kind");
    GateSpec g;
    g.adjoint = r.boolean_or(o, "adjoint", false);
    if (kind == "snap") {
        r.only_fields(o, {"kind", "adjoint", "target", "theta"});
        g.gate = gate::Snap{index_or(r, o, "target", 0), r.numbers(o, "theta")};
    } else if (kind == "displacement") {
        r.only_fields(o, {"kind", "adjoint", "target", "alpha"});
        g.gate = gate::Displacement{index_or(r, o, "target", 0), r.complex(o, "alpha")};
    } else if (kind == "cond_rotation") {
        r.only_fields(o, {"kind", "adjoint", "qubit", "mode", "photons", "theta", "phi"});
        g.gate = gate::CondRotation{index_or(r, o, "qubit", 0), index_or(r, o, "mode", 1), index(r, o, "photons"),
                                    r.number(o, "theta"), r.number_or(o, "phi", 0.0)};
    } else if (kind == "qubit_rotation") {
        r.only_fields(o, {"kind", "adjoint", "qubit", "theta", "phi"});
        g.gate = gate::QubitRotation{index_or(r, o, "qubit", 0), r.number(o, "theta"), r.number_or(o, "phi", 0.0)};
    } else if (kind == "controlled_increment") {
        r.only_fields(o, {"kind", "adjoint", "control", "target"});
        g.gate = gate::ControlledIncrement{index_or(r, o, "control", 0), index_or(r, o, "target", 1)};
    } else if (kind == "givens") {
        r.only_fields(o, {"kind", "adjoint", "target", "m", "n", "theta"});
        g.gate = gate::Givens{index_or(r, o, "target", 0), index(r, o, "m"), index(r, o, "n"), r.number(o, "theta")};
    } else if (kind == "phase_swap") {
        r.only_fields(o, {"kind", "adjoint", "target", "m", "n"});
        g.gate = gate::PhaseSwap{index_or(r, o, "target", 0), index(r, o, "m"), index(r, o, "n")};
    } else if (kind == "fourier") {
        r.only_fields(o, {"kind", "adjoint", "target"});
        g.gate = gate::Fourier{index_or(r, o, "target", 0)};
    } else if (kind == "ecd") {
        r.only_fields(o, {"kind", "adjoint", "qubit", "mode", "beta"});
        g.gate = gate::Ecd{index_or(r, o, "qubit", 0), index_or(r, o, "mode", 1), r.complex(o, "beta")};
    } else {
        r.doc().fail_at(child(o, "kind"), "unknown gate kind '" + kind + "'");
    }
    return g;
}

Json gate_to_json(const GateSpec& g) {
    Json j = std::visit(
        [](const auto& x) -> Json {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, gate::Snap>) return {{"target", x.target}, {"theta", x.theta}};
            else if constexpr (std::is_same_v<T, gate::Displacement>) return {{"target", x.target}, {"alpha", complex_json(x.alpha)}};
            else if constexpr (std::is_same_v<T, gate::CondRotation>)
                return {{"qubit", x.qubit}, {"mode", x.mode}, {"photons", x.photons}, {"theta", x.theta}, {"phi", x.phi}};
            else if constexpr (std::is_same_v<T, gate::QubitRotation>) return {{"qubit", x.qubit}, {"theta", x.theta}, {"phi", x.phi}};
            else if constexpr (std::is_same_v<T, gate::ControlledIncrement>) return {{"control", x.control}, {"target", x.target}};
            else if constexpr (std::is_same_v<T, gate::Givens>) return {{"target", x.target}, {"m", x.m}, {"n", x.n}, {"theta", x.theta}};
            else if constexpr (std::is_same_v<T, gate::PhaseSwap>) return {{"target", x.target}, {"m", x.m}, {"n", x.n}};
            else if constexpr (std::is_same_v<T, gate::Fourier>) return {{"target", x.target}};
            else return {{"qubit", x.qubit}, {"mode", x.mode}, {"beta", complex_json(x.beta)}};
        },
        g.gate);
    j["kind"] = std::string(kind_name(g));
    if (g.adjoint) j["adjoint"] = true;
    return j;
}

Circuit circuit_from_json(const Reader& r, const std::string& o) {
    r.only_fields(o, {"shape", "displacement_convention", "gates", "meta"});
    Circuit c;
    std::vector<std::size_t> dims;
    for (auto d : r.unsigned_list(o, "shape")) dims.push_back(static_cast<std::size_t>(d));
    try {
        c.shape = HilbertShape(dims);
    } catch (const Error& e) {
        throw Error(e.kind(), r.doc().where(child(o, "shape")) + ": " + e.what());
    }
    const std::string conv = r.string_or(o, "displacement_convention", "standard");
    if (conv == "standard") c.convention = DisplacementConvention::Standard;
    else if (conv == "paper") c.convention = DisplacementConvention::Paper;
    else r.doc().fail_at(child(o, "displacement_convention"), "expected \"standard\" or \"paper\", found \"" + conv + "\"");
    const std::string gates = child(o, "gates");
    const Json& arr = r.at(gates);
    if (!arr.is_array()) r.doc().fail_at(gates, "expected an array of gates");
    for (std::size_t i = 0; i < arr.size(); ++i) c.gates.push_back(gate_from_json(r, child(gates, i)));
    return c;
}

Json circuit_to_json(const Circuit& c) {
    Json gates = Json::array();
    for (const auto& g : c.gates) gates.push_back(gate_to_json(g));
    return Json{{"shape", c.shape.dims()},
                {"displacement_convention", c.convention == DisplacementConvention::Paper ? "paper" : "standard"},
                {"gates", gates}};
}

PulseSchedule schedule_from_json(const Reader& r, const std::string& o) {
    r.only_fields(o, {"dt_s", "controls", "meta"});
    PulseSchedule s;
    s.dt = r.number(o, "dt_s");
    const std::string controls = child(o, "controls");
    const Json& arr = r.at(controls);
    if (!arr.is_array()) r.doc().fail_at(controls, "expected an array of controls");
    for (std::size_t k = 0; k < arr.size(); ++k) {
        const std::string c = child(controls, k);
        r.only_fields(c, {"carrier_hz", "amps", "name"});
        s.carriers_hz.push_back(r.number_or(c, "carrier_hz", 0.0));
        s.amplitudes.push_back(r.complex_list(c, "amps"));
    }
    try {
        s.validate();
    } catch (const Error& e) {
        r.doc().fail_at(o, e.what());
    }
    return s;
}

Json schedule_to_json(const PulseSchedule& s) {
    Json controls = Json::array();
    for (std::size_t k = 0; k < s.n_controls(); ++k) {
        Json amps = Json::array();
        for (const cplx& u : s.amplitudes[k]) amps.push_back(complex_json(u));
        controls.push_back(Json{{"carrier_hz", s.carriers_hz[k]}, {"amps", amps}});
    }
    return Json{{"dt_s", s.dt}, {"controls", controls}};
}

Waveform waveform_from_json(const Reader& r, const std::string& o) {
    const std::string kind = r.string(o, "kind");
    try {
        if (kind == "sech") {
            r.only_fields(o, {"kind", "kappa_hz", "reversed"});
            return Waveform::sech(r.number(o, "kappa_hz"), r.boolean_or(o, "reversed", false));
        }
        if (kind == "sampled") {
            r.only_fields(o, {"kind", "dt_s", "t0_s", "values", "reversed"});
            Waveform w = Waveform::sampled(r.number_or(o, "t0_s", 0.0), r.number(o, "dt_s"), r.numbers(o, "values"));
            w.reversed = r.boolean_or(o, "reversed", false);
            return w;
        }
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Parse) throw;
        r.doc().fail_at(o, e.what());
    }
    r.doc().fail_at(child(o, "kind"), "unknown waveform kind '" + kind + "'");
}

Json waveform_to_json(const Waveform& w) {
    Json j;
    if (w.kind == Waveform::Kind::Sech) {
        j = Json{{"kind", "sech"}, {"kappa_hz", w.kappa_hz}};
    } else {
        j = Json{{"kind", "sampled"}, {"t0_s", w.t0_s}, {"dt_s", w.dt_s}, {"values", w.values}};
    }
    if (w.reversed) j["reversed"] = true;
    return j;
}

// ---------------------------------------------------------------------------

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        fail(ErrorKind::Numeric, "SHA-256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

std::string format_number(double v) {
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

Json meta_json(const Provenance& prov) {
    Json inputs = Json::array();
    for (const auto& [name, hash] : prov.inputs) inputs.push_back(Json{{"name", name}, {"sha256", hash}});
    return Json{{"tool", kToolName}, {"version", kToolVersion}, {"command", prov.command}, {"seed", prov.seed}, {"inputs", inputs}};
}

namespace {

std::string csv_cell(const Cell& c) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, double>) return format_number(x);
            else if constexpr (std::is_same_v<T, std::string>) return x;
            else return std::to_string(x);
        },
        c);
}

Json json_cell(const Cell& c) {
    return std::visit([](const auto& x) -> Json { return x; }, c);
}

} // namespace

std::string format_csv(const Table& table, const Provenance& prov) {
    std::string out;
    out += "# " + std::string(kToolName) + " " + std::string(kToolVersion) + "\n";
    out += "# command: " + prov.command + "\n";
    out += "# seed: " + std::to_string(prov.seed) + "\n";
    for (const auto& [name, hash] : prov.inputs) out += "# input: " + name + " sha256=" + hash + "\n";
    for (std::size_t i = 0; i < table.columns.size(); ++i) out += (i ? "," : "") + table.columns[i];
    out += "\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_cell(row[i]);
        out += "\n";
    }
    return out;
}

std::string format_table_json(const Table& table, const Provenance& prov) {
    Json rows = Json::array();
    for (const auto& row : table.rows) {
        Json r = Json::array();
        for (const auto& c : row) r.push_back(json_cell(c));
        rows.push_back(std::move(r));
    }
    return format_json(Json{{"columns", table.columns}, {"rows", rows}}, prov);
}

std::string format_json(Json doc, const Provenance& prov) {
    doc["meta"] = meta_json(prov);
    return doc.dump(2) + "\n";
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::Usage, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            fs::remove(tmp, ec);
            fail(ErrorKind::Usage, "cannot write " + tmp.string());
        }
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        fail(ErrorKind::Usage, "cannot move output into place at " + path.string());
    }
}

} // namespace cavityq::io
