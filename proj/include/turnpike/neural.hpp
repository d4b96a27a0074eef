#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "turnpike/diagnostics.hpp"

namespace turnpike {

enum class DynamicsForm { inside, outside };  // sigma(wx+b) vs w sigma(x)+b
enum class Activation { tanh_act, relu };
enum class LossKind { squared, cross_entropy };
enum class RegNorm { l2, h1 };
enum class TrainObjective { final_cost, augmented };

/// Supervised learning task for the forward-Euler ResNet. Labels are class
/// indices for cross-entropy and target vectors (rows) for squared loss.
struct LearningTask {
    Eigen::MatrixXd X;        // n x d0 inputs
    Eigen::MatrixXd Y;        // n x m targets (squared loss)
    std::vector<int> labels;  // class indices (cross-entropy)
    bool augment = true;      // append a zero coordinate to each sample
    DynamicsForm dynamics = DynamicsForm::outside;
    Activation sigma = Activation::tanh_act;
    LossKind loss = LossKind::squared;
    Eigen::MatrixXd P_w;  // fixed output map: logits = P_w x + P_b
    Eigen::VectorXd P_b;
    double alpha = 1e-3;
    double T = 4.0;
    int nt = 16;  // layers
    RegNorm reg = RegNorm::l2;

    int state_dim() const { return static_cast<int>(X.cols()) + (augment ? 1 : 0); }
    int samples() const { return static_cast<int>(X.rows()); }
    Eigen::MatrixXd initial_states() const;
};

/// Layer parameters u^k = (w^k, b^k), k = 0..nt-1.
struct Params {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;

    static Params zero(int nt, int d);
    static Params random(int nt, int d, double scale, std::uint64_t seed);
    double sq_norm_layer(int k) const { return w[k].squaredNorm() + b[k].squaredNorm(); }
};

/// Two-cluster binary task: n points around two seeded Gaussian blobs,
/// targets -1 / +1 (squared loss, m = 1).
LearningTask make_two_cluster_task(int n, std::uint64_t seed);

/// Annulus-vs-disc task (not linearly separable; needs augmentation).
LearningTask make_annulus_task(int n, std::uint64_t seed);

/// Forward Euler with step T/nt; returns all intermediate states,
/// states[k] is n x d.
std::vector<Eigen::MatrixXd> forward(const LearningTask& task, const Params& params);

/// Mean loss of the P-mapped states against the labels.
double empirical_risk(const LearningTask& task, const Eigen::MatrixXd& states_at_k);

double objective(const LearningTask& task, const Params& params, TrainObjective obj);

/// Exact discrete adjoint gradient (backpropagation through the Euler steps,
/// including the integrated risk term for the augmented objective).
Params grad(const LearningTask& task, const Params& params, TrainObjective obj);

struct TrainOptions {
    int max_iters = 5000;
    double grad_tol = 1e-8;
    double initial_step = 1.0;
    double armijo_c = 1e-4;
    std::uint64_t seed = 0;
    double init_scale = 0.2;
};

struct TrainResult {
    Params params;
    std::vector<double> history;  // objective per iteration (monotone)
    int iterations = 0;
    double grad_norm = 0.0;
};

TrainResult train(const LearningTask& task, TrainObjective obj, TrainOptions opts = {});

struct DecayReport {
    Eigen::VectorXd E_curve;       // risk per layer, nt+1 entries
    Eigen::VectorXd u_norm_curve;  // ||u^k||^2 per layer, nt entries
    DecayFit fitted;               // entry-rate fit of E + ||u||^2
    int stopping_layer = -1;       // first k with E + ||u||^2 <= threshold
    double threshold = 1e-2;
};

DecayReport decay_report(const LearningTask& task, const Params& params,
                         double threshold = 1e-2);

/// Horizon rescaling u_1(s) = T * u_T(s T): exact layerwise identity for
/// positively 1-homogeneous dynamics (outside form for any sigma; inside form
/// with relu). Throws NotHomogeneous for the tanh inside form.
Params rescale_control(const LearningTask& task, const Params& params_T, double T);

double classification_accuracy(const LearningTask& task, const Params& params);

}  // namespace turnpike
