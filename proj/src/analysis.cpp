#include "assistgrid/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace assistgrid {

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v, double m) {
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// Continued fraction for the regularized incomplete beta (Lentz's method).
double betacf(double a, double b, double x) {
  constexpr double eps = 1e-14, tiny = 1e-300;
  const double qab = a + b, qap = a + 1, qam = a - 1;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

double betai(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log(1.0 - x));
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double empowerment_change(const std::vector<double>& curve, int window) {
  if (window < 1 || static_cast<int>(curve.size()) < 2 * window)
    throw CurveTooShort("curve of length " + std::to_string(curve.size()) +
                        " cannot support window " + std::to_string(window));
  double first = 0, last = 0;
  for (int i = 0; i < window; ++i) {
    first += curve[static_cast<std::size_t>(i)];
    last += curve[curve.size() - 1 - static_cast<std::size_t>(i)];
  }
  return (last - first) / window;
}

bool classify_disempowerment(double user_delta, double bystander_delta) {
  return user_delta > 0.0 && bystander_delta < 0.0;
}

WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2)
    throw DegenerateSample("welch t-test needs at least 2 values per sample");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = mean_of(a), mb = mean_of(b);
  const double va = sample_variance(a, ma), vb = sample_variance(b, mb);
  const double sa = va / na, sb = vb / nb;
  if (sa + sb <= 0.0) throw DegenerateSample("both samples have zero variance");
  WelchResult r;
  r.t = (ma - mb) / std::sqrt(sa + sb);
  r.df = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  // Two-sided p from the t survival function via the incomplete beta.
  r.p = betai(r.df / 2.0, 0.5, r.df / (r.df + r.t * r.t));
  return r;
}

double cohens_d(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2)
    throw DegenerateSample("cohen's d needs at least 2 values per sample");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = mean_of(a), mb = mean_of(b);
  const double va = sample_variance(a, ma), vb = sample_variance(b, mb);
  const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
  if (pooled <= 0.0) {
    if (ma == mb) return 0.0;
    throw DegenerateSample("pooled standard deviation is zero");
  }
  return (ma - mb) / std::sqrt(pooled);
}

LayoutResult summarize_runs(const std::string& layout_id, ObjectiveKind kind,
                            const std::vector<RunCurves>& per_seed, int window) {
  if (per_seed.empty()) throw CurveTooShort("summarize_runs needs at least one run");
  LayoutResult res;
  res.layout_id = layout_id;
  res.kind = kind;
  res.change.window = window;
  double ur = 0, br = 0;
  for (const RunCurves& run : per_seed) {
    res.change.per_seed_user.push_back(empowerment_change(run.user_obj, window));
    res.change.per_seed_bystander.push_back(empowerment_change(run.bystander_obj, window));
    double u = 0, b = 0;
    for (int i = 0; i < window; ++i) {
      u += run.user_reward[run.user_reward.size() - 1 - static_cast<std::size_t>(i)];
      b += run.bystander_reward[run.bystander_reward.size() - 1 - static_cast<std::size_t>(i)];
    }
    ur += u / window;
    br += b / window;
  }
  res.change.user_delta = mean_of(res.change.per_seed_user);
  res.change.bystander_delta = mean_of(res.change.per_seed_bystander);
  res.disempowered = classify_disempowerment(res.change.user_delta, res.change.bystander_delta);
  res.final_user_reward = ur / static_cast<double>(per_seed.size());
  res.final_bystander_reward = br / static_cast<double>(per_seed.size());
  return res;
}

SweepReport aggregate_sweep(const std::vector<LayoutResult>& results) {
  SweepReport report;
  for (const LayoutResult& r : results) {
    SweepBucket& bucket = report.by_objective[objective_name(r.kind)];
    ++bucket.total;
    if (r.disempowered) ++bucket.disempowered;
  }

  // Joint-vs-empowerment comparison over layouts present in both buckets.
  std::map<std::string, const LayoutResult*> emp, joint;
  for (const LayoutResult& r : results) {
    if (r.kind == ObjectiveKind::Empowerment) emp[r.layout_id] = &r;
    if (r.kind == ObjectiveKind::JointEmpowerment) joint[r.layout_id] = &r;
  }
  std::vector<double> emp_deltas, joint_deltas, emp_rewards, joint_rewards;
  int increased = 0, unaffected = 0, matched = 0;
  for (const auto& [id, je] : joint) {
    auto it = emp.find(id);
    if (it == emp.end()) continue;
    ++matched;
    emp_deltas.push_back(it->second->change.bystander_delta);
    joint_deltas.push_back(je->change.bystander_delta);
    emp_rewards.push_back(it->second->final_user_reward);
    joint_rewards.push_back(je->final_user_reward);
    if (je->change.bystander_delta > 0.0) ++increased;
    if (je->change.bystander_delta >= 0.0) ++unaffected;
  }
  if (matched >= 2) {
    report.has_joint_comparison = true;
    report.bystander_increased_fraction = static_cast<double>(increased) / matched;
    report.bystander_unaffected_fraction = static_cast<double>(unaffected) / matched;
    report.bystander_delta_test = welch_t_test(joint_deltas, emp_deltas);
    report.bystander_delta_d = cohens_d(joint_deltas, emp_deltas);
    report.user_reward_test = welch_t_test(joint_rewards, emp_rewards);
    report.user_reward_d = cohens_d(joint_rewards, emp_rewards);
  }
  return report;
}

}  // namespace assistgrid
