#include "gibbsvb/io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace gibbsvb {

std::string fingerprint(std::string_view text) {
  std::uint64_t h = 14695981039346656037ULL;
  for(const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

void write_provenance(std::ostream& out, const Provenance& prov) {
  out << "# tool=" << tool_name << " version=" << tool_version << "\n";
  out << "# config_hash=" << prov.config_hash << "\n";
  out << "# seed=" << prov.seed << "\n";
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  std::istringstream ss(line);
  while(std::getline(ss, cur, ',')) {
    while(!cur.empty() && (cur.back() == '\r' || cur.back() == ' ')) {
      cur.pop_back();
    }
    std::size_t start = 0;
    while(start < cur.size() && cur[start] == ' ') {
      ++start;
    }
    fields.push_back(cur.substr(start));
  }
  return fields;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if(used != s.size()) {
      throw std::invalid_argument(s);
    }
    return v;
  } catch(const std::exception&) {
    throw Error(ErrorKind::io, "line " + std::to_string(line_no) + ": cannot parse number '" + s + "'");
  }
}

} // namespace

PointPattern read_pattern_csv(std::istream& in, const Window& window) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  bool with_marks = false;
  std::vector<Point> points;
  std::vector<int> marks;
  while(std::getline(in, line)) {
    ++line_no;
    if(line.empty() || line[0] == '#' || line == "\r") {
      continue;
    }
    const auto fields = split_csv(line);
    if(!header_seen) {
      if(fields.size() == 2 && fields[0] == "x" && fields[1] == "y") {
        with_marks = false;
      } else if(fields.size() == 3 && fields[0] == "x" && fields[1] == "y" && fields[2] == "mark") {
        with_marks = true;
      } else {
        throw Error(ErrorKind::io, "expected header 'x,y' or 'x,y,mark', got '" + line + "'");
      }
      header_seen = true;
      continue;
    }
    if(fields.size() != (with_marks ? 3u : 2u)) {
      throw Error(ErrorKind::io, "line " + std::to_string(line_no) + ": wrong number of fields");
    }
    points.push_back({parse_double(fields[0], line_no), parse_double(fields[1], line_no)});
    if(with_marks) {
      int m = 0;
      const auto& f = fields[2];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), m);
      if(ec != std::errc() || ptr != f.data() + f.size()) {
        throw Error(ErrorKind::io, "line " + std::to_string(line_no) + ": bad mark '" + f + "'");
      }
      marks.push_back(m);
    }
  }
  if(!header_seen) {
    throw Error(ErrorKind::io, "missing CSV header");
  }
  return PointPattern(window, std::move(points), std::move(marks));
}

PointPattern read_pattern_csv(const std::string& path, const Window& window) {
  std::ifstream in(path);
  if(!in) {
    throw Error(ErrorKind::io, "cannot open " + path);
  }
  return read_pattern_csv(in, window);
}

void write_pattern_csv(std::ostream& out, const PointPattern& pattern, const Provenance* prov) {
  if(prov) {
    write_provenance(out, *prov);
  }
  out << (pattern.has_marks() ? "x,y,mark\n" : "x,y\n");
  out << std::setprecision(17);
  for(std::size_t i = 0; i < pattern.n(); ++i) {
    out << pattern.point(i).x << "," << pattern.point(i).y;
    if(pattern.has_marks()) {
      out << "," << pattern.mark(i);
    }
    out << "\n";
  }
}

void write_pattern_csv(const std::string& path, const PointPattern& pattern, const Provenance* prov) {
  std::ofstream out(path);
  if(!out) {
    throw Error(ErrorKind::io, "cannot write " + path);
  }
  write_pattern_csv(out, pattern, prov);
}

} // namespace gibbsvb
