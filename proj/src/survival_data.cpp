#include "nlh/survival_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace nlh {

SurvivalSample::SurvivalSample(std::vector<Subject> subjects, double tau)
    : subjects_(std::move(subjects)) {
  if (subjects_.empty()) throw DataError("sample must contain at least one subject");
  covariate_dim_ = subjects_.front().covariates.size();
  double max_exit = 0.0;
  for (std::size_t j = 0; j < subjects_.size(); ++j) {
    const Subject& s = subjects_[j];
    if (!(s.entry_time >= 0.0) || !std::isfinite(s.entry_time))
      throw DataError("subject " + std::to_string(j) + ": entry time must be finite and >= 0");
    if (!(s.exit_time > s.entry_time) || !std::isfinite(s.exit_time))
      throw DataError("subject " + std::to_string(j) + ": exit time must exceed entry time");
    if (s.status != 0 && s.status != 1)
      throw DataError("subject " + std::to_string(j) + ": status must be 0 or 1");
    if (s.covariates.size() != covariate_dim_)
      throw DataError("subject " + std::to_string(j) + ": covariate dimension mismatch");
    if (s.entry_time > 0.0) has_entry_ = true;
    max_exit = std::max(max_exit, s.exit_time);
  }
  tau_ = tau < 0.0 ? max_exit : tau;
  if (!(tau_ > 0.0)) throw DataError("tau must be positive");
}

SurvivalSample SurvivalSample::from_times(std::span<const double> times,
                                          std::span<const int> status,
                                          std::span<const double> entry) {
  if (times.size() != status.size()) throw DataError("times and status differ in length");
  if (!entry.empty() && entry.size() != times.size())
    throw DataError("entry and times differ in length");
  std::vector<Subject> subjects(times.size());
  for (std::size_t j = 0; j < times.size(); ++j) {
    subjects[j].exit_time = times[j];
    subjects[j].status = status[j];
    subjects[j].entry_time = entry.empty() ? 0.0 : entry[j];
  }
  return SurvivalSample(std::move(subjects));
}

std::size_t SurvivalSample::event_count() const {
  return static_cast<std::size_t>(std::count_if(
      subjects_.begin(), subjects_.end(),
      [&](const Subject& s) { return s.status == 1 && s.exit_time <= tau_; }));
}

double SurvivalSample::max_exit_time() const {
  double m = 0.0;
  for (const auto& s : subjects_) m = std::max(m, s.exit_time);
  return m;
}

int RiskPath::total_events() const {
  int total = 0;
  for (int e : events) total += e;
  return total;
}

int RiskPath::risk_at(double t) const {
  if (t <= 0.0 || t > knots.back()) return 0;
  auto it = std::lower_bound(knots.begin(), knots.end(), t);
  return gap_risk[static_cast<std::size_t>(it - knots.begin()) - 1];
}

RiskPath build_risk_path(const SurvivalSample& sample) {
  RiskPath path;
  path.n = sample.n();
  path.tau = sample.tau();

  std::vector<double> knots{0.0};
  for (const auto& s : sample.subjects()) {
    knots.push_back(s.entry_time);
    knots.push_back(std::min(s.exit_time, sample.tau()));
  }
  if (sample.tau() > 0.0) knots.push_back(sample.tau());
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  const std::size_t gaps = knots.size() - 1;
  std::vector<int> diff(gaps + 1, 0);
  auto index_of = [&](double x) {
    return static_cast<std::size_t>(std::lower_bound(knots.begin(), knots.end(), x) -
                                    knots.begin());
  };
  for (const auto& s : sample.subjects()) {
    if (s.entry_time >= sample.tau()) continue;
    const std::size_t lo = index_of(s.entry_time);
    const std::size_t hi = index_of(std::min(s.exit_time, sample.tau()));
    diff[lo] += 1;
    diff[hi] -= 1;
  }
  path.gap_risk.resize(gaps);
  int running = 0;
  for (std::size_t g = 0; g < gaps; ++g) {
    running += diff[g];
    path.gap_risk[g] = running;
  }

  std::vector<double> event_times;
  for (const auto& s : sample.subjects())
    if (s.status == 1 && s.exit_time <= sample.tau()) event_times.push_back(s.exit_time);
  if (event_times.empty()) throw DataError("no events");
  std::sort(event_times.begin(), event_times.end());
  for (std::size_t i = 0; i < event_times.size();) {
    std::size_t k = i;
    while (k < event_times.size() && event_times[k] == event_times[i]) ++k;
    const std::size_t g = index_of(event_times[i]) - 1;
    path.event_times.push_back(event_times[i]);
    path.events.push_back(static_cast<int>(k - i));
    path.at_risk.push_back(path.gap_risk[g]);
    path.event_gap.push_back(g);
    i = k;
  }
  path.knots = std::move(knots);
  return path;
}

StepCurve::StepCurve(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.size() != values_.size()) throw DataError("step curve: size mismatch");
  for (std::size_t i = 1; i < knots_.size(); ++i)
    if (!(knots_[i] > knots_[i - 1])) throw DataError("step curve: knots must increase");
}

double StepCurve::operator()(double t) const {
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  if (it == knots_.begin()) return 0.0;
  return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

NelsonAalen nelson_aalen(const RiskPath& path) {
  std::vector<double> h(path.event_times.size());
  std::vector<double> v(path.event_times.size());
  double acc_h = 0.0;
  double acc_v = 0.0;
  for (std::size_t i = 0; i < path.event_times.size(); ++i) {
    const double y = path.at_risk[i];
    acc_h += path.events[i] / y;
    acc_v += path.events[i] / (y * y);
    h[i] = acc_h;
    v[i] = acc_v;
  }
  return {StepCurve(path.event_times, std::move(h)), StepCurve(path.event_times, std::move(v))};
}

double step_integral(const RiskPath& path, const GapIntegral& integral, double t) {
  if (t < 0.0) throw DataError("step_integral: t must be >= 0");
  double total = 0.0;
  for (std::size_t g = 0; g < path.gap_count(); ++g) {
    const double a = path.knots[g];
    if (a >= t) return total;
    const double b = std::min(path.knots[g + 1], t);
    total += integral(a, b, path.gap_risk[g]);
  }
  if (t > path.knots.back()) total += integral(path.knots.back(), t, 0);
  return total;
}

double quartic_kernel(double z) {
  if (std::abs(z) > 0.5) return 0.0;
  const double q = 1.0 - 4.0 * z * z;
  return 15.0 / 8.0 * q * q;
}

double quartic_kernel_derivative(double z) {
  if (std::abs(z) > 0.5) return 0.0;
  return 15.0 / 8.0 * 2.0 * (1.0 - 4.0 * z * z) * (-8.0 * z);
}

std::vector<double> kernel_smooth_hazard(const StepCurve& cumulative_hazard, double bandwidth,
                                         std::span<const double> grid) {
  if (!(bandwidth > 0.0)) throw DataError("bandwidth must be positive");
  const auto& knots = cumulative_hazard.knots();
  const auto& values = cumulative_hazard.values();
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double s = grid[k];
    if (s < 0.0) throw DataError("kernel grid times must be >= 0");
    double acc = 0.0;
    double previous = 0.0;
    for (std::size_t i = 0; i < knots.size(); ++i) {
      const double jump = values[i] - previous;
      previous = values[i];
      acc += jump * (quartic_kernel((s - knots[i]) / bandwidth) +
                     quartic_kernel((s + knots[i]) / bandwidth));
    }
    out[k] = acc / bandwidth;
  }
  return out;
}

void DiscreteTable::validate() const {
  const std::size_t k = left.size();
  if (k == 0) throw DataError("discrete table is empty");
  if (right.size() != k || at_risk.size() != k || events.size() != k)
    throw DataError("discrete table columns differ in length");
  for (std::size_t i = 0; i < k; ++i) {
    if (!(left[i] < right[i]))
      throw DataError("interval " + std::to_string(i) + ": left must be < right");
    if (i > 0 && left[i] < right[i - 1])
      throw DataError("interval " + std::to_string(i) + ": intervals must increase");
    if (events[i] < 0 || events[i] > at_risk[i])
      throw DataError("interval " + std::to_string(i) + ": need 0 <= events <= at_risk");
  }
}

DiscreteTable group_to_discrete(const SurvivalSample& sample, std::span<const double> cut_points) {
  if (cut_points.size() < 2) throw DataError("need at least two cut points");
  for (std::size_t i = 1; i < cut_points.size(); ++i)
    if (!(cut_points[i] > cut_points[i - 1])) throw DataError("cut points must increase");
  const std::size_t k = cut_points.size() - 1;
  DiscreteTable table;
  table.left.assign(cut_points.begin(), cut_points.end() - 1);
  table.right.assign(cut_points.begin() + 1, cut_points.end());
  table.at_risk.assign(k, 0);
  table.events.assign(k, 0);
  const double tau = sample.tau();
  for (const auto& s : sample.subjects()) {
    // past tau the subject is censored at tau
    const bool event = s.status == 1 && s.exit_time <= tau;
    const double exit = std::min(s.exit_time, tau);
    if (event && exit > cut_points.back())
      throw DataError("event time " + std::to_string(s.exit_time) + " beyond last cut point");
    for (std::size_t i = 0; i < k; ++i) {
      // In interval i iff entered before its right end and still present after its left end.
      if (s.entry_time < table.right[i] && exit > table.left[i]) {
        ++table.at_risk[i];
        if (event && exit <= table.right[i]) ++table.events[i];
      }
    }
  }
  return table;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& field, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(line_no) + ": cannot parse number '" + field + "'");
  }
}

// Reads non-blank lines, returning (line number, fields).
std::vector<std::pair<std::size_t, std::vector<std::string>>> read_rows(std::istream& in) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    rows.emplace_back(line_no, split(line));
  }
  return rows;
}

}  // namespace

SurvivalSample read_sample_csv(std::istream& in) {
  auto rows = read_rows(in);
  if (rows.empty()) throw DataError("line 1: missing header");
  const auto& [header_line, header] = rows.front();
  if (header.size() < 2 || header[0] != "time" || header[1] != "status")
    throw DataError("line " + std::to_string(header_line) +
                    ": header must start with 'time,status'");
  const bool has_entry = header.size() > 2 && header[2] == "entry";
  const std::size_t first_cov = has_entry ? 3 : 2;
  std::vector<Subject> subjects;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& [line_no, fields] = rows[r];
    if (fields.size() != header.size())
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    Subject s;
    s.exit_time = parse_number(fields[0], line_no);
    const double status = parse_number(fields[1], line_no);
    if (status != 0.0 && status != 1.0)
      throw DataError("line " + std::to_string(line_no) + ": status must be 0 or 1");
    s.status = static_cast<int>(status);
    if (has_entry) s.entry_time = parse_number(fields[2], line_no);
    for (std::size_t c = first_cov; c < fields.size(); ++c)
      s.covariates.push_back(parse_number(fields[c], line_no));
    if (!(s.exit_time > s.entry_time) || s.entry_time < 0.0)
      throw DataError("line " + std::to_string(line_no) + ": need exit time > entry >= 0");
    subjects.push_back(std::move(s));
  }
  if (subjects.empty()) throw DataError("no data rows");
  return SurvivalSample(std::move(subjects));
}

SurvivalSample read_sample_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_sample_csv(in);
}

DiscreteTable read_discrete_csv(std::istream& in) {
  auto rows = read_rows(in);
  if (rows.empty()) throw DataError("line 1: missing header");
  const auto& [header_line, header] = rows.front();
  const std::vector<std::string> expected{"left", "right", "at_risk", "events"};
  if (header != expected)
    throw DataError("line " + std::to_string(header_line) +
                    ": header must be 'left,right,at_risk,events'");
  DiscreteTable table;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& [line_no, fields] = rows[r];
    if (fields.size() != 4)
      throw DataError("line " + std::to_string(line_no) + ": expected 4 fields");
    table.left.push_back(parse_number(fields[0], line_no));
    table.right.push_back(parse_number(fields[1], line_no));
    const double y = parse_number(fields[2], line_no);
    const double e = parse_number(fields[3], line_no);
    if (y != std::floor(y) || e != std::floor(e))
      throw DataError("line " + std::to_string(line_no) + ": counts must be integers");
    table.at_risk.push_back(static_cast<long>(y));
    table.events.push_back(static_cast<long>(e));
  }
  table.validate();
  return table;
}

DiscreteTable read_discrete_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_discrete_csv(in);
}

}  // namespace nlh
