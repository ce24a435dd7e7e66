#include "staleguard/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>

#include "staleguard/ast.hpp"

namespace staleguard {

Value parse_literal(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  std::string_view s = trim(text);
  if (s == "TRUE" || s == "T") return Value::logical(true);
  if (s == "FALSE" || s == "F") return Value::logical(false);
  auto bad = [&]() -> Value { throw std::invalid_argument("not a literal: '" + std::string(text) + "'"); };
  if (s.empty()) return bad();
  if (s.back() == 'L') {
    std::int64_t v = 0;
    std::string_view digits = s.substr(0, s.size() - 1);
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc() || p != digits.data() + digits.size() || !kernel::fits_int(v)) return bad();
    return Value::integer(static_cast<std::int32_t>(v));
  }
  double d = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
  if (ec != std::errc() || p != s.data() + s.size()) return bad();
  return Value::dbl(d);
}

LoadedProgram load_source(std::string name, const std::string& source, const Defines& defines) {
  static const std::regex pragma(R"(^\s*#\s*default\s+([A-Za-z.][A-Za-z0-9._]*)\s*<-\s*(\S+)\s*$)");
  std::vector<std::pair<std::string, Value>> bindings;
  std::istringstream in(source);
  std::string line;
  while (std::getline(in, line)) {
    std::smatch m;
    if (std::regex_match(line, m, pragma)) bindings.emplace_back(m[1], parse_literal(m[2].str()));
  }
  for (const auto& [k, v] : defines) {
    auto it = std::find_if(bindings.begin(), bindings.end(), [&](const auto& b) { return b.first == k; });
    if (it != bindings.end())
      it->second = parse_literal(v);
    else
      bindings.emplace_back(k, parse_literal(v));
  }
  std::vector<std::string> names;
  for (const auto& b : bindings) names.push_back(b.first);

  LoadedProgram p;
  p.name = std::move(name);
  p.module = std::make_shared<Module>(lower(parse(source), names));
  p.bindings = std::move(bindings);
  if (auto fn = p.module->find_function("execute"); fn && p.module->functions[*fn].n_params() == 0)
    p.entry = fn;
  return p;
}

LoadedProgram load_program(const std::filesystem::path& file, const Defines& defines) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return load_source(file.stem().string(), ss.str(), defines);
  } catch (const std::exception& e) {
    throw std::runtime_error(file.string() + ":" + e.what());
  }
}

std::vector<std::filesystem::path> suite_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".mdyn") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::span<const RunRecord> BenchmarkResult::aggregated() const {
  const std::size_t skip = std::min<std::size_t>(discard, records.size());
  return std::span<const RunRecord>(records).subspan(skip);
}

double BenchmarkResult::mean_ms() const {
  auto a = aggregated();
  if (a.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : a) s += r.wall_ms;
  return s / static_cast<double>(a.size());
}

double BenchmarkResult::median_ms() const {
  std::vector<double> xs;
  for (const auto& r : aggregated()) xs.push_back(r.wall_ms);
  return median(std::move(xs));
}

std::uint64_t BenchmarkResult::outliers() const {
  std::uint64_t n = 0;
  for (const auto& r : aggregated()) n += r.outlier;
  return n;
}

struct BenchmarkRun::State {
  BenchmarkSpec spec;
  LoadedProgram prog;
  BenchmarkResult res;
  std::unique_ptr<Vm> vm;
  std::uint32_t it = 0;
};

BenchmarkRun::BenchmarkRun(const BenchmarkSpec& spec) : s_(std::make_unique<State>()) {
  if (spec.discard >= spec.iterations) throw std::invalid_argument("discard must be below iterations");
  s_->spec = spec;
  s_->prog = load_program(spec.source, spec.defines);
  s_->res.name = spec.name.empty() ? s_->prog.name : spec.name;
  s_->res.module = s_->prog.module;
  s_->res.discard = spec.discard;
  s_->vm = std::make_unique<Vm>(s_->prog.module, spec.vm);
  s_->res.backend = s_->vm->backend();
  s_->res.backend_warning = s_->vm->backend_warning();
}

BenchmarkRun::~BenchmarkRun() = default;
BenchmarkRun::BenchmarkRun(BenchmarkRun&&) noexcept = default;

bool BenchmarkRun::done() const { return s_->it >= s_->spec.iterations; }
Vm& BenchmarkRun::vm() { return *s_->vm; }

const RunRecord& BenchmarkRun::step() {
  State& st = *s_;
  Vm& vm = *st.vm;
  const std::uint32_t it = st.it++;
  auto bind = [&] {
    for (const auto& [k, v] : st.prog.bindings) vm.set_global(k, v);
  };
  using clock = std::chrono::steady_clock;
  const std::uint64_t u0 = vm.units();
  const std::uint64_t r0 = vm.events().count(EventKind::Recompile);
  const std::uint64_t d0 = vm.events().count(EventKind::Deopt);
  const std::uint64_t t0 = vm.events().count(EventKind::TierUp);
  const auto start = clock::now();
  Value v;
  try {
    if (st.prog.entry) {
      if (it == 0) {
        bind();
        vm.run();
        st.res.setup_units = vm.units() - u0;
      }
      v = vm.call(*st.prog.entry, {});
    } else {
      vm.reset_globals();
      bind();
      v = vm.run();
    }
  } catch (const std::exception& e) {
    throw std::runtime_error(st.res.name + " iteration " + std::to_string(it) + ": " + e.what());
  }
  const auto stop = clock::now();
  RunRecord r;
  r.benchmark = st.res.name;
  r.iteration = it;
  r.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  r.units = vm.units() - u0;
  r.recompiles = vm.events().count(EventKind::Recompile) - r0;
  r.deopts = vm.events().count(EventKind::Deopt) - d0;
  r.tierups = vm.events().count(EventKind::TierUp) - t0;
  r.result = v.is_unbound() ? std::string("<unbound>") : v.repr();
  st.res.records.push_back(std::move(r));
  return st.res.records.back();
}

BenchmarkResult BenchmarkRun::finish() {
  State& st = *s_;
  BenchmarkResult res = std::move(st.res);
  const double ref = st.spec.outlier_reference_ms ? *st.spec.outlier_reference_ms : res.median_ms();
  for (std::size_t i = st.spec.discard; i < res.records.size(); ++i)
    res.records[i].outlier = is_outlier(res.records[i].wall_ms, ref);
  res.events = st.vm->events().events();
  res.output = st.vm->output();
  res.sampler = st.vm->sampler_stats();
  return res;
}

BenchmarkResult run_benchmark(const BenchmarkSpec& spec, const IterationHook& after_iteration) {
  BenchmarkRun run(spec);
  while (!run.done()) {
    const std::uint32_t it = run.step().iteration;
    if (after_iteration) after_iteration(run.vm(), it);
  }
  return run.finish();
}

void write_csv(std::ostream& os, std::span<const BenchmarkResult> results, bool header) {
  if (header) os << kCsvHeader << '\n';
  for (const auto& b : results)
    for (const auto& r : b.records)
      os << r.benchmark << ',' << r.iteration << ',' << r.wall_ms << ',' << r.units << ',' << r.recompiles
         << ',' << r.deopts << ',' << (r.outlier ? 1 : 0) << '\n';
}

}  // namespace staleguard
