#pragma once

#include <string>
#include <type_traits>
#include <variant>

#include "baladin/local/payload.hpp"

namespace baladin::runtime {

/// Rank of the coordinator in sender/receiver fields; agents use their region index.
inline constexpr int kCoordinator = -1;

enum class Kind {
  SolveRequest,
  CondensedUp,
  CorrectionRound,
  CorrectionUp,
  DualDown,
  StepUp,
  StepSync,
  MeritRequest,
  MeritUp,
  DualEvalRequest,
  DualEvalUp,
};

inline const char* to_string(Kind k) {
  switch (k) {
    case Kind::SolveRequest: return "SolveRequest";
    case Kind::CondensedUp: return "CondensedUp";
    case Kind::CorrectionRound: return "CorrectionRound";
    case Kind::CorrectionUp: return "CorrectionUp";
    case Kind::DualDown: return "DualDown";
    case Kind::StepUp: return "StepUp";
    case Kind::StepSync: return "StepSync";
    case Kind::MeritRequest: return "MeritRequest";
    case Kind::MeritUp: return "MeritUp";
    case Kind::DualEvalRequest: return "DualEvalRequest";
    case Kind::DualEvalUp: return "DualEvalUp";
  }
  return "?";
}

using Payload = std::variant<local::SolveRequest, local::CondensedBlock, local::CorrectionRound, local::DualDown,
                             local::StepUp, local::StepSync, local::MeritRequest, local::MeritReport,
                             local::DualEvalRequest, local::DualEvalReport>;

// Audit: every payload is a self-contained value type, so a message owns all of its data.
template <class T>
inline constexpr bool is_value_payload =
    std::is_copy_constructible_v<T> && std::is_move_constructible_v<T> && !std::is_pointer_v<T> &&
    !std::is_reference_v<T>;

template <class V>
struct AllValues;
template <class... Ts>
struct AllValues<std::variant<Ts...>> : std::bool_constant<(is_value_payload<Ts> && ...)> {};
static_assert(AllValues<Payload>::value, "message payloads must be value types");

struct Message {
  int iteration = 0;
  int sender = kCoordinator;
  int receiver = kCoordinator;
  Kind kind = Kind::SolveRequest;
  Payload payload;

  bool forward() const { return receiver == kCoordinator; }
};

/// Floating-point entries of one message, itemized by purpose.
struct FloatCounts {
  long algebraic = 0;           // W_ℓ (packed), h_ℓ,0, h_ℓ,μ, Δλ
  long overhead = 0;            // A_ℓx_ℓ, E values, inertia, f_ℓ, violations, β's
  long step_sync = 0;           // β^p broadcast
  long control = 0;             // μ, ρ, α's
  long inertia_correction = 0;  // δ's and re-condensed blocks
  long globalization = 0;       // merit and dual-function exchanges

  long total() const { return algebraic + overhead + step_sync + control + inertia_correction + globalization; }

  FloatCounts& operator+=(const FloatCounts& o) {
    algebraic += o.algebraic;
    overhead += o.overhead;
    step_sync += o.step_sync;
    control += o.control;
    inertia_correction += o.inertia_correction;
    globalization += o.globalization;
    return *this;
  }
};

namespace detail {

inline long packed(long n) { return n * (n + 1) / 2; }
inline long len(const Eigen::VectorXd& v) { return static_cast<long>(v.size()); }
inline long merit_point_floats(const local::MeritPoint& p) { return 2 + len(p.Ax); }

}  // namespace detail

/// Counts are derived from the payload shapes only.
inline FloatCounts float_counts(const Message& m) {
  FloatCounts c;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, local::SolveRequest>) {
          c.control = 2;  // μ, ρ
        } else if constexpr (std::is_same_v<T, local::CondensedBlock>) {
          const long w = detail::packed(static_cast<long>(p.W.rows()));
          const long h = detail::len(p.h0) + detail::len(p.h_mu);
          if (m.kind == Kind::CorrectionUp) {
            c.inertia_correction = w + h + 3;  // re-condensed block and inertia triple
          } else {
            c.algebraic = w + h;
            c.overhead = detail::len(p.Ax) + 2 + 3 + 1 + 2;  // Ax, E^μ/E^0, inertia, f, violations
          }
        } else if constexpr (std::is_same_v<T, local::CorrectionRound>) {
          c.inertia_correction = 2;
        } else if constexpr (std::is_same_v<T, local::DualDown>) {
          c.algebraic = detail::len(p.dlambda);
          c.control = 1;  // μ⁺
        } else if constexpr (std::is_same_v<T, local::StepUp>) {
          c.overhead = 2;
        } else if constexpr (std::is_same_v<T, local::StepSync>) {
          c.step_sync = 1;  // β^p
          c.control = 4;    // α₁, α₂, α₃ and the λ step
        } else if constexpr (std::is_same_v<T, local::MeritRequest>) {
          c.globalization = 1;
        } else if constexpr (std::is_same_v<T, local::MeritReport>) {
          c.globalization = detail::merit_point_floats(p.at_z) + detail::merit_point_floats(p.at_x) +
                            detail::merit_point_floats(p.at_trial) + 1;
        } else if constexpr (std::is_same_v<T, local::DualEvalRequest>) {
          c.globalization = 1;
        } else if constexpr (std::is_same_v<T, local::DualEvalReport>) {
          c.globalization = 1;
        }
      },
      m.payload);
  return c;
}

}  // namespace baladin::runtime
