#include "stressmkl/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "json.hpp"
#include "stressmkl/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace stressmkl {

void atomic_write(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw Error(ErrorKind::Io, "short write to '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error(ErrorKind::Io, "cannot rename onto '" + path.string() + "': " + ec.message());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot read '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

double parse_double(const std::string& text, const std::string& what) {
    double out = 0.0;
    const char* b = text.data();
    const char* e = b + text.size();
    if (b != e && *b == '+') ++b;
    auto [ptr, ec] = std::from_chars(b, e, out);
    if (ec != std::errc() || ptr != e || b == e)
        throw Error(ErrorKind::Schema, what + ": expected a number, got '" + text + "'");
    return out;
}

namespace {

std::string clean_cell(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    s = s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) s = s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(clean_cell(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
    return out;
}

}  // namespace

std::optional<std::size_t> CsvTable::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot read '" + path.string() + "'");
    CsvTable t;
    std::string line;
    bool have_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!have_header) {
            // tolerate a UTF-8 byte order mark
            if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
            t.header = split_row(line);
            have_header = true;
            continue;
        }
        auto row = split_row(line);
        if (row.size() != t.header.size())
            throw Error(ErrorKind::Schema, path.string() + ":" + std::to_string(lineno) + ": " +
                                               std::to_string(row.size()) + " cells, header has " +
                                               std::to_string(t.header.size()));
        t.rows.push_back(std::move(row));
    }
    if (!have_header) throw Error(ErrorKind::EmptyInput, path.string() + ": no header row");
    return t;
}

void require_columns(const std::vector<std::string>& expected, const std::vector<std::string>& found,
                     const std::string& what, bool allow_extra) {
    bool ok = found.size() >= expected.size() && std::equal(expected.begin(), expected.end(), found.begin());
    if (ok && !allow_extra && found.size() != expected.size()) ok = false;
    if (ok) return;
    std::string missing, extra;
    for (const auto& e : expected)
        if (std::find(found.begin(), found.end(), e) == found.end()) missing += (missing.empty() ? "" : ",") + e;
    for (const auto& f : found)
        if (std::find(expected.begin(), expected.end(), f) == expected.end()) extra += (extra.empty() ? "" : ",") + f;
    std::string msg = what + ": expected columns [" + join(expected) + "], found [" + join(found) + "]";
    if (!missing.empty()) msg += "; missing: " + missing;
    if (!extra.empty() && !allow_extra) msg += "; unexpected: " + extra;
    throw Error(ErrorKind::Schema, msg);
}

SignalTrace read_trace_csv(const fs::path& path, const std::string& drive_id, Modality modality, double sample_rate) {
    const CsvTable t = read_csv(path);
    require_columns({"time_s", "value"}, t.header, path.string());
    SignalTrace trace;
    trace.drive_id = drive_id;
    trace.modality = modality;
    trace.sample_rate = sample_rate;
    for (const auto& row : t.rows) {
        trace.times.push_back(parse_double(row[0], path.string()));
        trace.values.push_back(parse_double(row[1], path.string()));
    }
    return trace;
}

void write_trace_csv(const fs::path& path, const SignalTrace& trace) {
    std::string out = "time_s,value\n";
    for (std::size_t i = 0; i < trace.size(); ++i)
        out += format_double(trace.times[i]) + "," + format_double(trace.values[i]) + "\n";
    atomic_write(path, out);
}

std::vector<ConditionSegment> read_segments_csv(const fs::path& path) {
    const CsvTable t = read_csv(path);
    require_columns({"start_s", "end_s", "condition"}, t.header, path.string());
    std::vector<ConditionSegment> out;
    for (const auto& row : t.rows) {
        ConditionSegment s;
        s.start = parse_double(row[0], path.string());
        s.end = parse_double(row[1], path.string());
        s.condition = parse_condition(row[2]);
        if (!(s.end > s.start))
            throw Error(ErrorKind::Schema, path.string() + ": segment end " + row[1] + " not after start " + row[0]);
        out.push_back(s);
    }
    return out;
}

void write_segments_csv(const fs::path& path, std::span<const ConditionSegment> segments) {
    std::string out = "start_s,end_s,condition\n";
    for (const auto& s : segments)
        out += format_double(s.start) + "," + format_double(s.end) + "," + to_string(s.condition) + "\n";
    atomic_write(path, out);
}

std::vector<ScoreSample> read_scores_csv(const fs::path& path, const std::string& score_column) {
    const CsvTable t = read_csv(path);
    require_columns({"time_s", score_column}, t.header, path.string());
    std::vector<ScoreSample> out;
    for (const auto& row : t.rows)
        out.push_back({parse_double(row[0], path.string()), parse_double(row[1], path.string())});
    return out;
}

void write_scores_csv(const fs::path& path, std::span<const ScoreSample> scores) {
    std::string out = "time_s,score\n";
    for (const auto& s : scores) out += format_double(s.time) + "," + format_double(s.score) + "\n";
    atomic_write(path, out);
}

fs::path sidecar_path(const fs::path& instances_csv) {
    fs::path p = instances_csv;
    p.replace_extension(".header.json");
    return p;
}

namespace {

std::vector<std::string> instance_columns() {
    std::vector<std::string> cols{"drive_id", "start_s", "label"};
    for (std::size_t i = 1; i <= kFeatureCount; ++i) cols.push_back("f" + std::to_string(i));
    return cols;
}

}  // namespace

void write_instances(const fs::path& path, std::span<const WindowInstance> instances, const std::string& dataset_id) {
    std::string out = join(instance_columns()) + "\n";
    for (const auto& w : instances) {
        if (w.drive_id.find(',') != std::string::npos)
            throw Error(ErrorKind::Schema, "drive id '" + w.drive_id + "' contains a comma");
        out += w.drive_id + "," + format_double(w.start) + "," + to_string(w.label);
        for (double f : w.features()) out += "," + format_double(f);
        out += "\n";
    }
    json header;
    header["format"] = "stressmkl-instances";
    header["version"] = 1;
    header["dataset_id"] = dataset_id;
    header["window_s"] = instances.empty() ? 30.0 : instances.front().duration;
    json cols = json::array();
    for (std::size_t i = 0; i < kFeatureCount; ++i)
        cols.push_back({{"column", "f" + std::to_string(i + 1)}, {"name", feature_names()[i]}});
    header["features"] = cols;
    atomic_write(sidecar_path(path), header.dump(2) + "\n");
    atomic_write(path, out);
}

std::vector<WindowInstance> read_instances(const fs::path& path) {
    const fs::path side = sidecar_path(path);
    json header;
    try {
        header = json::parse(read_file(side));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Schema, side.string() + ": " + e.what());
    }
    std::vector<std::string> names;
    try {
        for (const auto& c : header.at("features")) names.push_back(c.at("name").get<std::string>());
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Schema, side.string() + ": " + e.what());
    }
    const auto& expected = feature_names();
    require_columns(std::vector<std::string>(expected.begin(), expected.end()), names, side.string() + " features");
    const std::string dataset_id = header.value("dataset_id", std::string{});
    const double window_s = header.value("window_s", 30.0);

    const CsvTable t = read_csv(path);
    require_columns(instance_columns(), t.header, path.string());
    std::vector<WindowInstance> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        WindowInstance w;
        w.dataset_id = dataset_id;
        w.drive_id = row[0];
        w.start = parse_double(row[1], path.string());
        w.duration = window_s;
        w.label = parse_label(row[2]);
        for (std::size_t i = 0; i < kEdaFeatureCount; ++i) w.eda[i] = parse_double(row[3 + i], path.string());
        for (std::size_t i = 0; i < kHrFeatureCount; ++i)
            w.hr[i] = parse_double(row[3 + kEdaFeatureCount + i], path.string());
        out.push_back(std::move(w));
    }
    return out;
}

std::string to_string(Adapter a) {
    switch (a) {
        case Adapter::Generic: return "generic";
        case Adapter::DriveDb: return "drivedb";
        case Adapter::HciLab: return "hcilab";
        case Adapter::AffectiveRoad: return "affectiveroad";
    }
    return "?";
}

Adapter parse_adapter(const std::string& text) {
    for (auto a : {Adapter::Generic, Adapter::DriveDb, Adapter::HciLab, Adapter::AffectiveRoad})
        if (to_string(a) == text) return a;
    throw Error(ErrorKind::Schema, "unknown adapter '" + text + "' (expected generic, drivedb, hcilab, affectiveroad)");
}

Manifest load_manifest(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Schema, path.string() + ": " + e.what());
    }
    const fs::path base = path.parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    Manifest m;
    std::set<std::string> seen;
    try {
        m.dataset_id = j.at("dataset_id").get<std::string>();
        m.adapter = parse_adapter(j.value("adapter", std::string("generic")));
        if (j.contains("columns"))
            for (const auto& [k, v] : j.at("columns").items()) m.columns[k] = v.get<std::string>();
        for (const auto& d : j.at("drives")) {
            DriveEntry e;
            e.drive_id = d.at("drive_id").get<std::string>();
            if (!seen.insert(e.drive_id).second)
                throw Error(ErrorKind::Schema, path.string() + ": duplicate drive_id '" + e.drive_id + "'");
            if (m.adapter == Adapter::DriveDb) {
                e.record = resolve(d.at("record").get<std::string>());
            } else {
                e.eda = resolve(d.at("eda").get<std::string>());
                e.hr = resolve(d.at("hr").get<std::string>());
                e.annotation = resolve(d.at("annotation").get<std::string>());
            }
            const std::string kind =
                d.value("annotation_kind", std::string(m.adapter == Adapter::Generic || m.adapter == Adapter::DriveDb
                                                           ? "segments"
                                                           : "score"));
            if (kind == "segments") e.annotation_kind = AnnotationKind::Segments;
            else if (kind == "score") e.annotation_kind = AnnotationKind::Score;
            else throw Error(ErrorKind::Schema, "drive '" + e.drive_id + "': unknown annotation_kind '" + kind + "'");
            e.eda_rate = d.value("eda_rate", 4.0);
            e.hr_rate = d.value("hr_rate", 1.0);
            if (!(e.eda_rate > 0.0) || !(e.hr_rate > 0.0))
                throw Error(ErrorKind::Schema, "drive '" + e.drive_id + "': sample rates must be positive");
            for (const auto& f : {e.eda, e.hr, e.record, e.annotation})
                if (!f.empty() && !fs::exists(f))
                    throw Error(ErrorKind::Io, "drive '" + e.drive_id + "': missing file '" + f.string() + "'");
            m.drives.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Schema, path.string() + ": " + e.what());
    }
    if (m.drives.empty()) throw Error(ErrorKind::EmptyInput, path.string() + ": manifest lists no drives");
    return m;
}

void write_manifest(const fs::path& path, const Manifest& m) {
    const fs::path base = path.parent_path();
    // relative entries are already relative to the manifest and pass through
    auto rel = [&](const fs::path& p) {
        if (p.empty() || p.is_relative()) return p.generic_string();
        return fs::relative(p, base.empty() ? fs::current_path() : fs::absolute(base)).generic_string();
    };
    json j;
    j["dataset_id"] = m.dataset_id;
    j["adapter"] = to_string(m.adapter);
    if (!m.columns.empty()) j["columns"] = m.columns;
    json drives = json::array();
    for (const auto& e : m.drives) {
        json d;
        d["drive_id"] = e.drive_id;
        if (m.adapter == Adapter::DriveDb) {
            d["record"] = rel(e.record);
        } else {
            d["eda"] = rel(e.eda);
            d["hr"] = rel(e.hr);
            d["annotation"] = rel(e.annotation);
        }
        d["annotation_kind"] = e.annotation_kind == AnnotationKind::Segments ? "segments" : "score";
        d["eda_rate"] = e.eda_rate;
        d["hr_rate"] = e.hr_rate;
        drives.push_back(d);
    }
    j["drives"] = drives;
    atomic_write(path, j.dump(2) + "\n");
}

const std::vector<Condition>& drivedb_condition_sequence() {
    static const std::vector<Condition> seq{Condition::Rest, Condition::City,    Condition::Highway, Condition::City,
                                            Condition::Highway, Condition::City, Condition::Rest};
    return seq;
}

std::vector<ConditionSegment> segments_from_markers(std::span<const double> times, std::span<const double> marker,
                                                    double end_time) {
    if (times.size() != marker.size() || times.empty())
        throw Error(ErrorKind::Shape, "marker channel and time column differ in length");
    std::vector<double> events;
    for (std::size_t i = 1; i < marker.size(); ++i)
        if (marker[i] > 0.5 && marker[i - 1] <= 0.5) events.push_back(times[i]);
    if (marker.front() > 0.5) events.insert(events.begin(), times.front());
    const auto& seq = drivedb_condition_sequence();
    if (events.size() != seq.size() - 1)
        throw Error(ErrorKind::Schema, "marker channel: expected " + std::to_string(seq.size() - 1) +
                                           " marker events separating rest, city, highway, city, highway, city, "
                                           "rest; found " + std::to_string(events.size()));
    std::vector<ConditionSegment> out;
    double start = times.front();
    for (std::size_t k = 0; k < seq.size(); ++k) {
        const double end = k < events.size() ? events[k] : end_time;
        if (end > start) out.push_back({start, end, seq[k]});
        start = end;
    }
    return out;
}

namespace {

std::string column_name(const Manifest& m, const std::string& key, const std::string& fallback) {
    auto it = m.columns.find(key);
    return it == m.columns.end() ? fallback : it->second;
}

// Min-max per drive onto [0, 1] after validating the native range.
std::vector<ScoreSample> normalize_scores(std::vector<ScoreSample> s, double lo, double hi, const std::string& drive) {
    if (s.empty()) throw Error(ErrorKind::EmptyInput, "drive '" + drive + "': empty score file");
    double mn = s.front().score, mx = s.front().score;
    for (const auto& x : s) {
        if (!(x.score >= lo && x.score <= hi))
            throw Error(ErrorKind::InvalidScore, "drive '" + drive + "': score " + format_double(x.score) +
                                                     " outside [" + format_double(lo) + ", " + format_double(hi) + "]");
        mn = std::min(mn, x.score);
        mx = std::max(mx, x.score);
    }
    if (!(mx > mn)) throw DegenerateRangeError(mn);
    for (auto& x : s) x.score = (x.score - mn) / (mx - mn);
    return s;
}

RawDrive load_drivedb(const Manifest& m, const DriveEntry& e) {
    const CsvTable t = read_csv(e.record);
    const std::vector<std::string> wanted{column_name(m, "time", "Elapsed time"), column_name(m, "eda", "hand GSR"),
                                          column_name(m, "hr", "HR"), column_name(m, "marker", "marker")};
    std::vector<std::size_t> idx;
    for (const auto& w : wanted) {
        auto c = t.column(w);
        if (!c) require_columns(wanted, t.header, e.record.string(), true);
        idx.push_back(*t.column(w));
    }
    RawDrive d;
    d.annotation_kind = AnnotationKind::Segments;
    d.eda.drive_id = d.hr.drive_id = e.drive_id;
    d.eda.modality = Modality::EDA;
    d.hr.modality = Modality::HR;
    d.eda.sample_rate = e.eda_rate;
    d.hr.sample_rate = e.hr_rate;
    std::vector<double> marker;
    std::vector<double> times;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        double time = 0.0;
        try {
            time = parse_double(row[idx[0]], e.record.string());
        } catch (const Error&) {
            if (r == 0) continue;  // units row
            throw;
        }
        times.push_back(time);
        d.eda.times.push_back(time);
        d.hr.times.push_back(time);
        d.eda.values.push_back(parse_double(row[idx[1]], e.record.string()));
        d.hr.values.push_back(parse_double(row[idx[2]], e.record.string()));
        marker.push_back(parse_double(row[idx[3]], e.record.string()));
    }
    if (times.empty()) throw Error(ErrorKind::EmptyInput, e.record.string() + ": no samples");
    d.segments = segments_from_markers(times, marker, d.eda.end_time());
    return d;
}

}  // namespace

RawDrive load_drive(const Manifest& m, const DriveEntry& e) {
    if (m.adapter == Adapter::DriveDb) return load_drivedb(m, e);
    RawDrive d;
    d.eda = read_trace_csv(e.eda, e.drive_id, Modality::EDA, e.eda_rate);
    d.hr = read_trace_csv(e.hr, e.drive_id, Modality::HR, e.hr_rate);
    d.annotation_kind = e.annotation_kind;
    if (e.annotation_kind == AnnotationKind::Segments) {
        d.segments = read_segments_csv(e.annotation);
        return d;
    }
    switch (m.adapter) {
        case Adapter::HciLab:
            d.scores = normalize_scores(read_scores_csv(e.annotation, column_name(m, "score", "workload")), 0.0, 128.0,
                                        e.drive_id);
            break;
        case Adapter::AffectiveRoad:
            d.scores = normalize_scores(read_scores_csv(e.annotation, column_name(m, "score", "stress")), 0.0, 1.0,
                                        e.drive_id);
            break;
        default: d.scores = read_scores_csv(e.annotation, column_name(m, "score", "score")); break;
    }
    return d;
}

}  // namespace stressmkl
