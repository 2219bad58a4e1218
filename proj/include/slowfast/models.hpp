#pragma once

// Built-in slow-fast models and a name-based registry.
//
// Fast states of the particle models are heading vectors v in {-1, +1}^n,
// labelled by strings such as "+-+". State indices enumerate labels in
// lexicographic order with '+' before '-', so +e is state 0 and -e is the
// last state.

#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "slowfast/simulation.hpp"

namespace slowfast {

struct ToyParams {
  int n = 2;
  double lambda = 1.0;
  double acceptance = 0.5;  // flip acceptance of the selected coordinate
};

// Toy consensus model: a(x, v) = v, each clock ring selects a coordinate
// uniformly and flips it with probability acceptance; +-e are absorbing.
// The per-particle clocks aggregate to rate n lambda.
SlowFastModel build_toy(const ToyParams& params);

struct NavigationParams {
  int n = 2;
  double lambda = 1.0;
  double beta = 1.0;
  // Below this value of x_1 the consensus headings stop being absorbing and
  // behave like mixed states (a deliberate break of class stability).
  double compromise_below = -std::numeric_limits<double>::infinity();
};

// Coupled navigation model. Particle j sits at x_j and heads to the target
// at -1 or +1. A selected particle switches to heading h = -v_j with
// probability sigma(beta x_j h), sigma the logistic function, so each
// particle is drawn toward the target on its own side. Flip probabilities
// are (1/n) sigma(.), which gives the row Lipschitz bound K0 = beta / (2n)
// in the 1-norm. beta = 0 is the toy model with acceptance 1/2.
SlowFastModel build_coupled_navigation(const NavigationParams& params);
double navigation_lipschitz_bound(int n, double beta);

struct ErgodicVariantParams {
  int n = 2;
  double lambda = 1.0;
  double p = 0.5;           // intra-class mixing
  double acceptance = 0.5;
  double drift_a = 1.5;     // speed along +-e in the first class state
  double drift_b = 0.5;     // speed in the second class state
};

// Toy model with each consensus state split into a closed two-state class
// {e:a, e:b}. Entering consensus lands on a or b with probability 1/2 each.
// Inside a class a -> b with probability p and b -> a with probability 1 - p,
// so the class law is (1 - p, p) and the averaged drift is
// ((1 - p) drift_a + p drift_b) (+-e).
SlowFastModel build_ergodic_class_variant(const ErgodicVariantParams& params);

std::string heading_label(unsigned index, int n);
std::vector<double> heading_vector(unsigned index, int n);

using ModelParams = std::map<std::string, double>;

class ModelRegistry {
 public:
  using Builder = std::function<SlowFastModel(const ModelParams&)>;

  // Registry preloaded with "toy", "coupled_navigation" and "ergodic_variant".
  static ModelRegistry with_builtins();

  void add(const std::string& name, std::vector<std::string> parameter_names, Builder builder);
  bool contains(const std::string& name) const;
  std::vector<std::string> names() const;
  const std::vector<std::string>& parameters(const std::string& name) const;
  // Throws InvalidArgument for unknown names or parameters.
  SlowFastModel build(const std::string& name, const ModelParams& params) const;

 private:
  struct Entry {
    std::vector<std::string> parameters;
    Builder builder;
  };
  std::map<std::string, Entry> entries_;
};

}  // namespace slowfast
