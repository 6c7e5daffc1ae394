#include <gtest/gtest.h>

#include "catspin/product_oracle.hpp"
#include "test_support.hpp"

using namespace catspin;
using namespace catspin::testing;

namespace {

const ProtocolId kAll[] = {ProtocolId::Crain, ProtocolId::Scain, ProtocolId::Cac,
                           ProtocolId::Cosac, ProtocolId::Scac};

bool same_rotate(const Pulse& p, Axis a, double angle) {
  const auto* r = std::get_if<Rotate>(&p);
  return r && r->axis == a && std::abs(r->angle - angle) < 1e-15;
}
bool same_squeeze(const Pulse& p, double mu, int sign) {
  const auto* q = std::get_if<Squeeze>(&p);
  return q && q->mu == mu && q->sign == sign;
}
bool same_dark(const Pulse& p, double fraction, int sign) {
  const auto* d = std::get_if<DarkPhase>(&p);
  return d && d->fraction == fraction && d->sign == sign;
}

}  // namespace

TEST(Builtin, ScainSequence) {
  const double h = 0.5 * kPi;
  const auto s = builtin(ProtocolId::Scain, {h, Axis::X, -1, std::nullopt});
  ASSERT_EQ(s.pulses.size(), 9u);
  EXPECT_TRUE(same_rotate(s.pulses[0], Axis::X, h));
  EXPECT_TRUE(same_squeeze(s.pulses[1], h, -1));
  EXPECT_TRUE(same_rotate(s.pulses[2], Axis::X, h));
  EXPECT_TRUE(same_dark(s.pulses[3], 0.5, +1));
  EXPECT_TRUE(same_rotate(s.pulses[4], Axis::X, kPi));
  EXPECT_TRUE(same_dark(s.pulses[5], 0.5, -1));
  EXPECT_TRUE(same_rotate(s.pulses[6], Axis::X, -h));
  EXPECT_TRUE(same_squeeze(s.pulses[7], h, +1));
  EXPECT_TRUE(same_rotate(s.pulses[8], Axis::X, h));
  EXPECT_EQ(s.count_dark(0.5), 2u);
  EXPECT_EQ(s.detection, Detection::conventional());
  EXPECT_EQ(final_stage(s), 'J');
}

TEST(Builtin, CrainSequence) {
  const auto s = builtin(ProtocolId::Crain);
  ASSERT_EQ(s.pulses.size(), 5u);
  EXPECT_TRUE(same_rotate(s.pulses[0], Axis::X, 0.5 * kPi));
  EXPECT_TRUE(same_dark(s.pulses[1], 0.5, +1));
  EXPECT_TRUE(same_rotate(s.pulses[2], Axis::X, kPi));
  EXPECT_TRUE(same_dark(s.pulses[3], 0.5, -1));
  EXPECT_TRUE(same_rotate(s.pulses[4], Axis::X, 0.5 * kPi));
}

TEST(Builtin, ScacSequenceAndAuxiliaryAxis) {
  const double h = 0.5 * kPi;
  const auto s = builtin(ProtocolId::Scac, {h, Axis::Y, +1, std::nullopt});
  ASSERT_EQ(s.pulses.size(), 7u);
  EXPECT_TRUE(same_rotate(s.pulses[0], Axis::X, h));
  EXPECT_TRUE(same_squeeze(s.pulses[1], h, -1));
  EXPECT_TRUE(same_rotate(s.pulses[2], Axis::Y, h));
  EXPECT_TRUE(same_dark(s.pulses[3], 1.0, +1));
  EXPECT_TRUE(same_rotate(s.pulses[4], Axis::Y, h));
  EXPECT_TRUE(same_squeeze(s.pulses[5], h, +1));
  EXPECT_TRUE(same_rotate(s.pulses[6], Axis::X, h));
  EXPECT_EQ(s.count_dark(1.0), 1u);
  EXPECT_EQ(final_stage(s), 'H');
}

TEST(Builtin, ClockPulsesAndDetections) {
  const auto cac = builtin(ProtocolId::Cac);
  const auto cosac = builtin(ProtocolId::Cosac);
  ASSERT_EQ(cac.pulses.size(), 3u);
  EXPECT_EQ(cac.count_dark(1.0), 1u);
  EXPECT_EQ(cac.detection, Detection::up_count());
  EXPECT_EQ(cosac.detection, Detection::collective(-1));
  EXPECT_EQ(cosac.detection.resolve_index(17), 17);
}

TEST(Builtin, CollectiveIndexDefaultsPerProtocol) {
  ProtocolParams p;
  p.detection = Detection{Detection::Kind::Collective, std::nullopt};
  EXPECT_EQ(builtin(ProtocolId::Scain, p).detection.resolve_index(40), 0);
  EXPECT_EQ(builtin(ProtocolId::Scac, p).detection.resolve_index(40), 40);
  p.detection = Detection::collective(3);
  EXPECT_EQ(builtin(ProtocolId::Scain, p).detection.resolve_index(40), 3);
}

TEST(Builtin, RejectsBadInput) {
  EXPECT_THROW(builtin("ramsey"), DomainError);
  ProtocolParams p;
  p.xi = 0;
  EXPECT_THROW(builtin(ProtocolId::Scain, p), DomainError);
  p = {};
  p.ara = Axis::Z;
  EXPECT_THROW(builtin(ProtocolId::Scain, p), DomainError);
  EXPECT_THROW(Detection::collective(41).resolve_index(40), DomainError);
  EXPECT_THROW(Detection::collective(-42).resolve_index(40), DomainError);
}

TEST(Builtin, NameLookupIsCaseInsensitive) {
  EXPECT_EQ(builtin("ScAiN").name, "SCAIN");
  EXPECT_EQ(builtin("cosac").name, "COSAC");
}

TEST(Stages, LettersMapToPulseCounts) {
  const auto s = builtin(ProtocolId::Scain);
  EXPECT_EQ(stage_pulse_count(s, 'A'), 0u);
  EXPECT_EQ(stage_pulse_count(s, 'd'), 3u);
  EXPECT_EQ(stage_pulse_count(s, 'J'), 9u);
  EXPECT_THROW(stage_pulse_count(s, 'K'), DomainError);
  EXPECT_THROW(stage_pulse_count(s, '3'), DomainError);
}

TEST(Run, ScainEvenPopulatesOnlyExtremalStates) {
  const EnsembleDims d(40);
  const OperatorSet ops(d);
  const auto spec = builtin(ProtocolId::Scain);
  for (double phi : {0.0, 0.01, kPi / 80.0, 0.3, -1.2}) {
    const auto s = run(spec, ops, phi);
    EXPECT_NEAR(s.population(0), std::pow(std::cos(20.0 * phi), 2), 1e-10) << phi;
    EXPECT_NEAR(s.population(40), std::pow(std::sin(20.0 * phi), 2), 1e-10) << phi;
    EXPECT_NEAR(s.population(0) + s.population(40), 1.0, 1e-10);
  }
}

TEST(Run, CrainAtZeroPhaseReturnsDown) {
  for (int n : {1, 2, 9, 40, 41}) {
    const OperatorSet ops{EnsembleDims(n)};
    const auto s = run(builtin(ProtocolId::Crain), ops, 0.0);
    EXPECT_NEAR(s.population(0), 1.0, 1e-12) << n;
  }
}

TEST(Run, ScacBalancedPointSplitsEvenly) {
  const OperatorSet ops{EnsembleDims(40)};
  const auto s = run(builtin(ProtocolId::Scac), ops, kPi / 80.0);
  EXPECT_NEAR(s.population(40), 0.5, 1e-10);
  EXPECT_NEAR(s.population(0), 0.5, 1e-10);
}

TEST(Run, StopAfterMatchesPrefix) {
  const OperatorSet ops{EnsembleDims(10)};
  const auto spec = builtin(ProtocolId::Scain);
  const auto a = run(spec, ops, 0.2, std::nullopt, 3);
  auto b = basis_state(ops.dims(), 0);
  for (int i = 0; i < 3; ++i) b = apply_pulse(b, ops, spec.pulses[i], 0.2);
  EXPECT_LT(max_abs_diff(a.amps, b.amps), 1e-15);
}

TEST(Run, MuOverrideFeedsBothTwists) {
  const OperatorSet ops{EnsembleDims(12)};
  ProtocolParams p;
  p.mu = 0.7;
  const auto direct = run(builtin(ProtocolId::Scain, p), ops, 0.11);
  const auto overridden = run(builtin(ProtocolId::Scain), ops, 0.11, 0.7);
  EXPECT_LT(max_abs_diff(direct.amps, overridden.amps), 1e-14);
}

TEST(Run, PreparedRunMatchesFullRun) {
  const OperatorSet ops{EnsembleDims(23)};
  for (ProtocolId id : kAll) {
    const auto spec = builtin(id);
    const PreparedRun pr(spec, ops, 0.9);
    for (double phi : {-0.4, 0.0, 0.05, 1.3}) {
      EXPECT_LT(max_abs_diff(pr.at(phi).amps, run(spec, ops, phi, 0.9).amps), 1e-14);
    }
  }
}

TEST(Run, RejectsMismatchedOperators) {
  const OperatorSet ops{EnsembleDims(5)};
  auto spec = builtin(ProtocolId::Scain);
  spec.pulses.push_back(DarkPhase{1.5, 1});
  EXPECT_THROW(run(spec, ops, 0.1), DomainError);
  EXPECT_THROW(run(builtin(ProtocolId::Scain), ops, NAN), DomainError);
}

// --- product-space oracle ---------------------------------------------------

TEST(Oracle, CrainTwoAtoms) {
  const OperatorSet ops{EnsembleDims(2)};
  const auto spec = builtin(ProtocolId::Crain);
  const auto o = oracle_run(spec, 2, kPi / 3.0);
  EXPECT_LT(o.leakage, 1e-10);
  EXPECT_LT(max_abs_diff(o.dicke_amps, run(spec, ops, kPi / 3.0).amps), 1e-10);
}

TEST(Oracle, ScainTwoAtomsFringe) {
  const OperatorSet ops{EnsembleDims(2)};
  const auto spec = builtin(ProtocolId::Scain);
  for (double phi : linspace(-kPi, kPi, 13)) {
    const auto o = oracle_run(spec, 2, phi);
    EXPECT_LT(max_abs_diff(o.dicke_amps, run(spec, ops, phi).amps), 1e-10);
    // <J_z> = -cos(2 phi) for N = 2
    double jz = 0.0;
    for (int k = 0; k <= 2; ++k) jz += std::norm(o.dicke_amps[k]) * (k - 1.0);
    EXPECT_NEAR(jz, -std::cos(2.0 * phi), 1e-10);
  }
}

TEST(Oracle, SingleAtomCoincides) {
  const OperatorSet ops{EnsembleDims(1)};
  for (ProtocolId id : kAll) {
    const auto spec = builtin(id);
    const auto o = oracle_run(spec, 1, 0.77);
    EXPECT_LT(max_abs_diff(o.dicke_amps, run(spec, ops, 0.77).amps), 1e-12);
  }
}

TEST(Oracle, RejectsLargeEnsembles) {
  EXPECT_THROW(oracle_run(builtin(ProtocolId::Crain), 5, 0.0), DimensionError);
  EXPECT_THROW(oracle_run(builtin(ProtocolId::Crain), 0, 0.0), DimensionError);
}

TEST(Oracle, RandomSequencesStaySymmetric) {
  auto g = rng(909);
  for (int n = 1; n <= 4; ++n) {
    const OperatorSet ops{EnsembleDims(n)};
    for (int trial = 0; trial < 10; ++trial) {
      ProtocolSpec spec{"random", {}, Detection::conventional()};
      for (int i = 0; i < 8; ++i) spec.pulses.push_back(random_pulse(g));
      const double phi = uniform(g, -kPi, kPi);
      const auto o = oracle_run(spec, n, phi);
      EXPECT_LT(o.leakage, 1e-10);
      EXPECT_LT(max_abs_diff(o.dicke_amps, run(spec, ops, phi).amps), 1e-10);
    }
  }
}

// --- protocol properties ----------------------------------------------------

TEST(ProtocolProperties, UntwistedScainMatchesCrain) {
  // mu = 0 with the auxiliary rotations dropped leaves the CRAIN pulses.
  for (int n : {3, 8, 21}) {
    const OperatorSet ops{EnsembleDims(n)};
    ProtocolParams p;
    p.mu = 0.0;
    auto scain = builtin(ProtocolId::Scain, p);
    scain.pulses.erase(scain.pulses.begin() + 6);
    scain.pulses.erase(scain.pulses.begin() + 2);
    const auto crain = builtin(ProtocolId::Crain);
    for (double phi : linspace(-kPi, kPi, 41)) {
      const double a = run(scain, ops, phi).amps.cwiseAbs2().dot(ops.jz_diagonal());
      const double b = run(crain, ops, phi).amps.cwiseAbs2().dot(ops.jz_diagonal());
      EXPECT_NEAR(a, b, 1e-10) << n << " " << phi;
    }
  }
}

TEST(ProtocolProperties, UntwistedScainWithAuxiliaryRotationsIsFlat) {
  // Kept in place the two auxiliary rotations merge with the outer pulses into
  // pi rotations, so every step maps J_z eigenstates to J_z eigenstates.
  const OperatorSet ops{EnsembleDims(8)};
  ProtocolParams p;
  p.mu = 0.0;
  const auto scain = builtin(ProtocolId::Scain, p);
  for (double phi : linspace(-kPi, kPi, 17)) {
    const double a = run(scain, ops, phi).amps.cwiseAbs2().dot(ops.jz_diagonal());
    EXPECT_NEAR(a, -4.0, 1e-10) << phi;
  }
}

TEST(ProtocolProperties, XiSignInvertsFringe) {
  for (int n : {4, 10, 40, 41}) {
    const OperatorSet ops{EnsembleDims(n)};
    ProtocolParams p;
    p.xi = -1;
    const auto undo = builtin(ProtocolId::Scain, p);
    p.xi = +1;
    const auto redo = builtin(ProtocolId::Scain, p);
    for (double phi : linspace(-0.3, 0.3, 31)) {
      const double a = run(undo, ops, phi).amps.cwiseAbs2().dot(ops.jz_diagonal());
      const double b = run(redo, ops, phi).amps.cwiseAbs2().dot(ops.jz_diagonal());
      EXPECT_NEAR(a, -b, 1e-9) << n << " " << phi;
    }
  }
}

TEST(ProtocolProperties, AuxiliaryAxisSwapsParityBehaviour) {
  // With ARA = x the even ensemble shows the N-fold fringe; with ARA = y the
  // odd ensemble takes over that shape.
  const int ne = 10, no = 11;
  const OperatorSet even{EnsembleDims(ne)};
  const OperatorSet odd{EnsembleDims(no)};
  ProtocolParams px, py;
  py.ara = Axis::Y;
  const auto sx = builtin(ProtocolId::Scain, px);
  const auto sy = builtin(ProtocolId::Scain, py);
  for (double phi : linspace(-0.25, 0.25, 21)) {
    const double ex = run(sx, even, phi).amps.cwiseAbs2().dot(even.jz_diagonal());
    const double oy = run(sy, odd, phi).amps.cwiseAbs2().dot(odd.jz_diagonal());
    EXPECT_NEAR(ex, -0.5 * ne * std::cos(ne * phi), 1e-9);
    EXPECT_NEAR(std::abs(oy), 0.5 * no * std::abs(std::cos(no * phi)), 1e-9) << phi;
  }
}
