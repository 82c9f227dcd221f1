// SPDX-License-Identifier: Apache-2.0
//
// Line-delimited detection/annotation documents and RFC-4180 event tables.
#pragma once

#include "dsi/error.hpp"
#include "dsi/records.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

namespace dsi {

enum class ParseMode { Strict, Lenient };

struct ParseOptions {
    ParseMode mode = ParseMode::Strict;
    /// Worker threads for per-line decoding; output is identical for any value.
    unsigned threads = 1;
    /// Optional dataset epoch, half-open [epoch_begin, epoch_end) on instants.
    std::optional<Timestamp> epoch_begin;
    std::optional<Timestamp> epoch_end;
};

template <typename Record>
struct ParseResult {
    std::vector<Record> records;
    std::vector<LineError> errors;
    /// Non-blank lines (or data rows) seen; records.size() + errors.size() in lenient mode.
    std::size_t lines = 0;
};

struct AnnotationParseResult : ParseResult<AnnotationRecord> {
    /// Annotations whose image_id is not among the known detections (lenient mode only).
    std::vector<std::string> orphans;
};

namespace detail {

using Json = nlohmann::json;

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '\n')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) {
        s.remove_suffix(1);
    }
    return s;
}

struct FieldError {
    std::string field;
    std::string message;
};

using LineOutcome = std::variant<FieldError, DetectionRecord>;

inline bool in_epoch(const Timestamp& ts, const ParseOptions& opt)
{
    return !((opt.epoch_begin && ts.micros < opt.epoch_begin->micros) ||
             (opt.epoch_end && ts.micros >= opt.epoch_end->micros));
}

inline std::optional<FieldError> read_number(const Json& obj, const char* key, double& out)
{
    const auto it = obj.find(key);
    if (it == obj.end()) {
        return FieldError{key, "missing field"};
    }
    if (!it->is_number()) {
        return FieldError{key, "expected a number"};
    }
    out = it->get<double>();
    if (!std::isfinite(out)) {
        return FieldError{key, "not finite"};
    }
    return std::nullopt;
}

inline std::optional<FieldError> read_string(const Json& obj, const char* key, std::string& out)
{
    const auto it = obj.find(key);
    if (it == obj.end()) {
        return FieldError{key, "missing field"};
    }
    if (!it->is_string()) {
        return FieldError{key, "expected a string"};
    }
    out = it->get<std::string>();
    if (out.empty()) {
        return FieldError{key, "empty string"};
    }
    return std::nullopt;
}

inline std::optional<FieldError> read_point(const Json& obj, GeoPoint& p)
{
    if (auto e = read_number(obj, "lat", p.lat)) {
        return e;
    }
    if (auto e = read_number(obj, "lon", p.lon)) {
        return e;
    }
    if (p.lat < -90.0 || p.lat > 90.0) {
        return FieldError{"lat", "out of range [-90, 90]"};
    }
    if (p.lon < -180.0 || p.lon > 180.0) {
        return FieldError{"lon", "out of range [-180, 180]"};
    }
    return std::nullopt;
}

inline std::optional<FieldError> read_timestamp(const Json& obj, const ParseOptions& opt, Timestamp& ts)
{
    std::string raw;
    if (auto e = read_string(obj, "ts", raw)) {
        return e;
    }
    const auto parsed = parse_iso8601(raw);
    if (!parsed) {
        return FieldError{"ts", "unparsable timestamp \"" + raw + "\""};
    }
    if (!in_epoch(*parsed, opt)) {
        return FieldError{"ts", "outside dataset epoch"};
    }
    ts = *parsed;
    return std::nullopt;
}

inline LineOutcome decode_detection(std::string_view line, const ParseOptions& opt)
{
    Json doc = Json::parse(line.begin(), line.end(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        return FieldError{"", "malformed document"};
    }
    static constexpr std::string_view kAllowed[] = {"image_id", "ts", "lat", "lon", "label", "conf", "attrs"};
    for (const auto& [key, _] : doc.items()) {
        if (std::find(std::begin(kAllowed), std::end(kAllowed), key) == std::end(kAllowed)) {
            return FieldError{key, "unknown field"};
        }
    }

    DetectionRecord r;
    if (auto e = read_string(doc, "image_id", r.image_id)) {
        return *e;
    }
    if (auto e = read_timestamp(doc, opt, r.ts)) {
        return *e;
    }
    if (auto e = read_point(doc, r.point)) {
        return *e;
    }
    if (auto e = read_string(doc, "label", r.label)) {
        return *e;
    }
    if (auto e = read_number(doc, "conf", r.conf)) {
        return *e;
    }
    if (r.conf < 0.0 || r.conf > 1.0) {
        return FieldError{"conf", "out of range [0, 1]"};
    }
    if (const auto it = doc.find("attrs"); it != doc.end()) {
        if (!it->is_object()) {
            return FieldError{"attrs", "expected an object"};
        }
        for (const auto& [key, value] : it->items()) {
            if (!value.is_number()) {
                return FieldError{"attrs", "value of \"" + key + "\" is not a number"};
            }
            const double v = value.get<double>();
            if (!std::isfinite(v)) {
                return FieldError{"attrs", "value of \"" + key + "\" is not finite"};
            }
            r.attrs.emplace(key, v);
        }
    }
    return r;
}

/// Reads non-blank lines in chunks, decodes them (possibly in parallel) and
/// hands outcomes to `sink` strictly in input order.
/// Line sources: `bool next(std::string&)`, newline stripped.
struct StreamLines {
    std::istream& in;
    bool operator()(std::string& out) { return static_cast<bool>(std::getline(in, out)); }
};

struct BufferLines {
    std::string_view rest;
    bool done = false;
    bool operator()(std::string& out)
    {
        if (done) {
            return false;
        }
        const auto nl = rest.find('\n');
        if (nl == std::string_view::npos) {
            done = true;
            if (rest.empty()) {
                return false;
            }
            out.assign(rest);
            return true;
        }
        out.assign(rest.substr(0, nl));
        rest.remove_prefix(nl + 1);
        return true;
    }
};

template <typename Source, typename Decode, typename Sink>
std::size_t for_each_line(Source next_line, unsigned threads, Decode decode, Sink sink)
{
    constexpr std::size_t kChunk = 1 << 15;
    std::vector<std::string> lines;
    std::vector<std::size_t> numbers;
    using Outcome = decltype(decode(std::string_view{}));
    std::vector<std::optional<Outcome>> outcomes;
    std::size_t physical = 0;
    std::size_t seen = 0;
    std::string buf;
    bool more = true;
    threads = std::max(1u, threads);

    while (more) {
        lines.clear();
        numbers.clear();
        while (lines.size() < kChunk) {
            if (!next_line(buf)) {
                more = false;
                break;
            }
            ++physical;
            if (trim(buf).empty()) {
                continue;
            }
            lines.push_back(std::move(buf));
            numbers.push_back(physical);
            buf.clear();
        }
        outcomes.assign(lines.size(), std::nullopt);
        auto work = [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                outcomes[i].emplace(decode(lines[i]));
            }
        };
        if (threads == 1 || lines.size() < 1024) {
            work(0, lines.size());
        } else {
            std::vector<std::jthread> pool;
            const std::size_t step = (lines.size() + threads - 1) / threads;
            for (std::size_t b = 0; b < lines.size(); b += step) {
                pool.emplace_back(work, b, std::min(lines.size(), b + step));
            }
        }
        for (std::size_t i = 0; i < lines.size(); ++i) {
            sink(numbers[i], std::move(*outcomes[i]));
        }
        seen += lines.size();
    }
    return seen;
}

inline void report(ParseMode mode, std::vector<LineError>& errors, LineError e)
{
    if (mode == ParseMode::Strict) {
        throw ParseError(std::move(e));
    }
    errors.push_back(std::move(e));
}

/// Duplicate-key detector that stores 64-bit hashes and verifies collisions
/// against the accepted records.
class KeySet {
public:
    template <typename KeyOf>
    bool insert(std::string_view a, std::string_view b, std::uint32_t index, KeyOf key_of)
    {
        const std::uint64_t h = hash(a, b);
        auto [lo, hi] = seen_.equal_range(h);
        for (auto it = lo; it != hi; ++it) {
            const auto [ka, kb] = key_of(it->second);
            if (ka == a && kb == b) {
                return false;
            }
        }
        seen_.emplace(h, index);
        return true;
    }

private:
    static std::uint64_t hash(std::string_view a, std::string_view b)
    {
        const std::uint64_t ha = std::hash<std::string_view>{}(a);
        const std::uint64_t hb = std::hash<std::string_view>{}(b);
        return ha ^ (hb + 0x9e3779b97f4a7c15ULL + (ha << 6) + (ha >> 2));
    }

    std::unordered_multimap<std::uint64_t, std::uint32_t> seen_;
};

} // namespace detail

namespace detail {

template <typename Source>
ParseResult<DetectionRecord> parse_detections_from(Source source, const ParseOptions& opt)
{
    ParseResult<DetectionRecord> out;
    KeySet keys;
    auto decode = [&opt](std::string_view line) { return decode_detection(line, opt); };
    auto key_of = [&out](std::uint32_t i) {
        return std::pair<std::string_view, std::string_view>{out.records[i].image_id, out.records[i].label};
    };
    out.lines = for_each_line(std::move(source), opt.threads, decode, [&](std::size_t line, LineOutcome&& o) {
        if (auto* fe = std::get_if<FieldError>(&o)) {
            report(opt.mode, out.errors, LineError{line, std::move(fe->field), std::move(fe->message)});
            return;
        }
        auto& r = std::get<DetectionRecord>(o);
        if (!keys.insert(r.image_id, r.label, static_cast<std::uint32_t>(out.records.size()), key_of)) {
            report(opt.mode, out.errors,
                   LineError{line, "image_id", "duplicate image_id+label (" + r.image_id + ", " + r.label + ")"});
            return;
        }
        out.records.push_back(std::move(r));
    });
    return out;
}

} // namespace detail

/// Parses line-delimited detection documents.
///
/// Strict mode throws ParseError on the first invalid line (including a repeated
/// image_id+label). Lenient mode skips and reports every invalid line, so
/// `records.size() + errors.size() == lines`. Blank lines are ignored.
inline ParseResult<DetectionRecord> parse_detections(std::istream& in, const ParseOptions& opt = {})
{
    return detail::parse_detections_from(detail::StreamLines{in}, opt);
}

inline ParseResult<DetectionRecord> parse_detections(std::string_view text, const ParseOptions& opt = {})
{
    return detail::parse_detections_from(detail::BufferLines{text}, opt);
}

/// Canonical one-line document: fixed key order, `attrs` omitted when empty.
inline std::string to_json_line(const DetectionRecord& r)
{
    nlohmann::ordered_json j;
    j["image_id"] = r.image_id;
    j["ts"] = format_iso8601(r.ts);
    j["lat"] = r.point.lat;
    j["lon"] = r.point.lon;
    j["label"] = r.label;
    j["conf"] = r.conf;
    if (!r.attrs.empty()) {
        auto& a = j["attrs"];
        a = nlohmann::ordered_json::object();
        for (const auto& [k, v] : r.attrs) {
            a[k] = v;
        }
    }
    return j.dump();
}

inline void write_detections(std::ostream& out, std::span<const DetectionRecord> records)
{
    for (const auto& r : records) {
        out << to_json_line(r) << '\n';
    }
}

// ---------------------------------------------------------------- annotations

namespace detail {

using AnnotationOutcome = std::variant<FieldError, AnnotationRecord>;

inline AnnotationOutcome decode_annotation(std::string_view line)
{
    Json doc = Json::parse(line.begin(), line.end(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        return FieldError{"", "malformed document"};
    }
    AnnotationRecord a;
    if (auto e = read_string(doc, "image_id", a.image_id)) {
        return *e;
    }
    for (const char* key : {"predicted", "actual"}) {
        const auto it = doc.find(key);
        if (it == doc.end()) {
            return FieldError{key, "missing field"};
        }
        if (!it->is_boolean()) {
            return FieldError{key, "expected a boolean"};
        }
        (std::string_view(key) == "predicted" ? a.predicted : a.actual) = it->get<bool>();
    }
    if (const auto it = doc.find("decoy_note"); it != doc.end() && !it->is_null()) {
        if (!it->is_string()) {
            return FieldError{"decoy_note", "expected a string"};
        }
        a.decoy_note = it->get<std::string>();
    }
    for (const auto& [key, _] : doc.items()) {
        if (key != "image_id" && key != "predicted" && key != "actual" && key != "decoy_note") {
            return FieldError{key, "unknown field"};
        }
    }
    return a;
}

} // namespace detail

/// Parses line-delimited annotation documents. When `known_images` is given,
/// an annotation for an unknown image is an error in strict mode and is kept
/// but listed in `orphans` in lenient mode. Repeated image_ids are rejected.
inline AnnotationParseResult parse_annotations(std::istream& in, const ParseOptions& opt = {},
                                               const std::unordered_set<std::string>* known_images = nullptr)
{
    AnnotationParseResult out;
    std::unordered_set<std::string> ids;
    out.lines = detail::for_each_line(detail::StreamLines{in}, opt.threads, detail::decode_annotation,
                                      [&](std::size_t line, detail::AnnotationOutcome&& o) {
        if (auto* fe = std::get_if<detail::FieldError>(&o)) {
            detail::report(opt.mode, out.errors, LineError{line, std::move(fe->field), std::move(fe->message)});
            return;
        }
        auto& a = std::get<AnnotationRecord>(o);
        if (!ids.insert(a.image_id).second) {
            detail::report(opt.mode, out.errors, LineError{line, "image_id", "duplicate image_id " + a.image_id});
            return;
        }
        if (known_images && !known_images->contains(a.image_id)) {
            if (opt.mode == ParseMode::Strict) {
                throw ParseError(LineError{line, "image_id", "orphan annotation for unknown image " + a.image_id});
            }
            out.orphans.push_back(a.image_id);
        }
        out.records.push_back(std::move(a));
    });
    return out;
}

inline std::string to_json_line(const AnnotationRecord& a)
{
    nlohmann::ordered_json j;
    j["image_id"] = a.image_id;
    j["predicted"] = a.predicted;
    j["actual"] = a.actual;
    if (a.decoy_note) {
        j["decoy_note"] = *a.decoy_note;
    }
    return j.dump();
}

// ---------------------------------------------------------------- csv / events

/// Minimal RFC-4180 reader: quoted fields, doubled quotes, embedded newlines, CRLF.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    /// Reads the next record. `first_line` receives its starting physical line.
    /// Throws DataError on an unterminated quoted field.
    bool next(std::vector<std::string>& fields, std::size_t& first_line)
    {
        fields.clear();
        std::string field;
        bool quoted = false;
        bool any = false;
        first_line = line_ + 1;
        int c;
        while ((c = in_.get()) != std::char_traits<char>::eof()) {
            any = true;
            const char ch = static_cast<char>(c);
            if (quoted) {
                if (ch == '"') {
                    if (in_.peek() == '"') {
                        in_.get();
                        field += '"';
                    } else {
                        quoted = false;
                    }
                } else {
                    if (ch == '\n') {
                        ++line_;
                    }
                    field += ch;
                }
                continue;
            }
            if (ch == '"' && field.empty()) {
                quoted = true;
            } else if (ch == ',') {
                fields.push_back(std::move(field));
                field.clear();
            } else if (ch == '\n') {
                ++line_;
                if (!field.empty() && field.back() == '\r') {
                    field.pop_back();
                }
                fields.push_back(std::move(field));
                return true;
            } else {
                field += ch;
            }
        }
        if (quoted) {
            throw ParseError(LineError{first_line, "", "unterminated quoted field"});
        }
        if (!any) {
            return false;
        }
        ++line_;
        if (!field.empty() && field.back() == '\r') {
            field.pop_back();
        }
        fields.push_back(std::move(field));
        return true;
    }

private:
    std::istream& in_;
    std::size_t line_ = 0;
};

inline std::string csv_escape(std::string_view s)
{
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) {
        return std::string(s);
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

inline std::optional<double> parse_double(std::string_view s)
{
    s = detail::trim(s);
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

/// Parses an event table with header `event_id,ts,lat,lon,category` in any
/// column order; extra columns are ignored. A missing required column throws
/// ParseError in either mode.
inline ParseResult<EventRecord> parse_events(std::istream& in, const ParseOptions& opt = {})
{
    static constexpr const char* kColumns[] = {"event_id", "ts", "lat", "lon", "category"};
    ParseResult<EventRecord> out;
    CsvReader csv(in);
    std::vector<std::string> fields;
    std::size_t line = 0;
    if (!csv.next(fields, line)) {
        throw ParseError(LineError{1, "", "missing header row"});
    }
    if (!fields.empty() && fields[0].starts_with("\xEF\xBB\xBF")) {
        fields[0].erase(0, 3);
    }
    std::size_t col[5];
    for (std::size_t c = 0; c < 5; ++c) {
        const auto it = std::find_if(fields.begin(), fields.end(),
                                     [&](const std::string& f) { return detail::trim(f) == kColumns[c]; });
        if (it == fields.end()) {
            throw ParseError(LineError{line, kColumns[c], std::string("missing required column \"") + kColumns[c] + "\""});
        }
        col[c] = static_cast<std::size_t>(it - fields.begin());
    }
    const std::size_t width = fields.size();
    std::unordered_set<std::string> ids;

    while (csv.next(fields, line)) {
        if (fields.size() == 1 && detail::trim(fields[0]).empty()) {
            continue;
        }
        ++out.lines;
        auto fail = [&](std::string field, std::string msg) {
            detail::report(opt.mode, out.errors, LineError{line, std::move(field), std::move(msg)});
        };
        if (fields.size() != width) {
            fail("", "expected " + std::to_string(width) + " fields, got " + std::to_string(fields.size()));
            continue;
        }
        EventRecord e;
        e.event_id = fields[col[0]];
        e.category = fields[col[4]];
        if (e.event_id.empty()) {
            fail("event_id", "empty string");
            continue;
        }
        const auto ts = parse_iso8601(detail::trim(fields[col[1]]));
        if (!ts) {
            fail("ts", "unparsable timestamp \"" + fields[col[1]] + "\"");
            continue;
        }
        if (!detail::in_epoch(*ts, opt)) {
            fail("ts", "outside dataset epoch");
            continue;
        }
        e.ts = *ts;
        const auto lat = parse_double(fields[col[2]]);
        if (!lat || *lat < -90.0 || *lat > 90.0) {
            fail("lat", "bad coordinate \"" + fields[col[2]] + "\"");
            continue;
        }
        const auto lon = parse_double(fields[col[3]]);
        if (!lon || *lon < -180.0 || *lon > 180.0) {
            fail("lon", "bad coordinate \"" + fields[col[3]] + "\"");
            continue;
        }
        e.point = {*lat, *lon};
        if (!ids.insert(e.event_id).second) {
            fail("event_id", "duplicate event_id " + e.event_id);
            continue;
        }
        out.records.push_back(std::move(e));
    }
    return out;
}

inline ParseResult<EventRecord> parse_events(std::string_view text, const ParseOptions& opt = {})
{
    std::istringstream in{std::string(text)};
    return parse_events(in, opt);
}

inline std::string format_double(double v)
{
    return nlohmann::json(v).dump();
}

/// Canonical event table (header `event_id,ts,lat,lon,category`).
inline void write_events_csv(std::ostream& out, std::span<const EventRecord> events)
{
    out << "event_id,ts,lat,lon,category\n";
    for (const auto& e : events) {
        out << csv_escape(e.event_id) << ',' << format_iso8601(e.ts) << ',' << format_double(e.point.lat) << ','
            << format_double(e.point.lon) << ',' << csv_escape(e.category) << '\n';
    }
}

} // namespace dsi
