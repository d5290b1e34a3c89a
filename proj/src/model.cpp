#include "spvc/model.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "spvc/errors.hpp"

namespace spvc {

namespace {

struct VariantInfo {
  Variant variant;
  const char* name;
  SpatialKind kind;
  bool sse;
};

constexpr std::array<VariantInfo, 10> kVariants{{
    {Variant::Base, "Base", SpatialKind::None, false},
    {Variant::SSE, "SSE", SpatialKind::None, true},
    {Variant::NNGP, "NNGP", SpatialKind::NNGP, false},
    {Variant::NNGP_SSE, "NNGP+SSE", SpatialKind::NNGP, true},
    {Variant::RR, "RR", SpatialKind::RR, false},
    {Variant::RR_SSE, "RR+SSE", SpatialKind::RR, true},
    {Variant::CAR, "CAR", SpatialKind::CAR, false},
    {Variant::CAR_SSE, "CAR+SSE", SpatialKind::CAR, true},
    {Variant::FullGP, "FullGP", SpatialKind::Dense, false},
    {Variant::FullGP_SSE, "FullGP+SSE", SpatialKind::Dense, true},
}};

const VariantInfo& info(Variant v) {
  for (const auto& i : kVariants)
    if (i.variant == v) return i;
  throw ConfigError("unknown variant");
}

}  // namespace

std::string variant_name(Variant v) { return info(v).name; }

std::optional<Variant> parse_variant(std::string_view name) {
  for (const auto& i : kVariants)
    if (name == i.name) return i.variant;
  return std::nullopt;
}

const std::vector<std::string>& variant_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& i : kVariants) out.emplace_back(i.name);
    return out;
  }();
  return names;
}

SpatialKind spatial_kind(Variant v) { return info(v).kind; }
bool has_sse(Variant v) { return info(v).sse; }

std::size_t theta_dims(const ModelSpec& spec) {
  switch (spatial_kind(spec.variant)) {
    case SpatialKind::None: return 0;
    case SpatialKind::CAR: return 1;
    default: return 3;
  }
}

bool theta_in_support(const ModelSpec& spec, const MaternParams& t) {
  const auto& h = spec.hyper;
  if (!(t.sigma2 >= h.sigma2_min && t.sigma2 <= h.sigma2_max)) return false;
  if (theta_dims(spec) < 3) return true;
  return t.phi >= h.phi_min && t.phi <= h.phi_max && t.nu >= h.nu_min && t.nu <= h.nu_max;
}

void ModelSpec::validate() const {
  std::vector<std::string> problems;
  const SpatialKind kind = spatial_kind(variant);
  if (kind == SpatialKind::NNGP && m < 1) problems.push_back("m must be at least 1");
  if (kind == SpatialKind::RR && a < 1) problems.push_back("a must be at least 1");
  if (kind == SpatialKind::CAR && !(alpha_car > 0.0 && alpha_car < 1.0))
    problems.push_back("alpha_car must lie in (0, 1)");
  if (car_cutoff && !(*car_cutoff > 0.0)) problems.push_back("car_cutoff must be positive");
  if (smoothing_bandwidth && !(*smoothing_bandwidth > 0.0))
    problems.push_back("smoothing_bandwidth must be positive");
  const auto& h = hyper;
  if (!(h.mu_prior_var > 0.0)) problems.push_back("hyperpriors.mu_prior_var must be positive");
  if (!(h.gamma_df_extra > 0.0) || !(h.sigma_df_extra > 0.0))
    problems.push_back("hyperpriors degrees of freedom offsets must be positive");
  if (!(h.gamma_scale > 0.0) || !(h.sigma_scale > 0.0))
    problems.push_back("hyperpriors scales must be positive");
  if (!(h.sigma2_min > 0.0 && h.sigma2_min < h.sigma2_max)) problems.push_back("invalid sigma2 bounds");
  if (!(h.phi_min > 0.0 && h.phi_min < h.phi_max)) problems.push_back("invalid phi bounds");
  if (!(h.nu_min > 0.0 && h.nu_min < h.nu_max)) problems.push_back("invalid nu bounds");
  auto check_theta = [&](const MaternParams& t, const char* what) {
    try {
      t.validate();
    } catch (const Error& e) {
      problems.push_back(std::string(what) + ": " + e.what());
      return;
    }
    if (kind != SpatialKind::None && !theta_in_support(*this, t))
      problems.push_back(std::string(what) + " lies outside the prior bounds");
  };
  check_theta(theta_init, "theta_init");
  if (theta_fixed) check_theta(*theta_fixed, "theta_fixed");
  if (!problems.empty()) {
    std::ostringstream msg;
    msg << "invalid model spec:";
    for (const auto& p : problems) msg << "\n  - " << p;
    throw ConfigError(msg.str());
  }
}

}  // namespace spvc
