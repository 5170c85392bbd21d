#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gnk/activation.hpp"
#include "gnk/errors.hpp"
#include "gnk/graph.hpp"
#include "gnk/predictor.hpp"

namespace gnk {

enum class NetArch { fcn, gnn, skip_gnn, gat };
const char* to_string(NetArch a);
NetArch parse_net_arch(const std::string& s);

struct NetSpec {
  NetArch arch = NetArch::gnn;
  HyperParams hp;
  Activation act = Activation::relu();         // layer nonlinearity (sigma2 for gat)
  Activation sigma1 = Activation::identity();  // gat attention nonlinearity
  bool bias = true;
};

enum class ParamKind { weight, bias, attention };

struct ParamBlock {
  std::string name;
  ParamKind kind = ParamKind::weight;
  int layer = 0;
  int head = -1;
  Mat value;
};

// Finite network in NTK parametrization; every parameter is drawn from N(0, 1).
// widths = {d0, d1, ..., dL}. GAT: layer 1 is linear, layers 2..L are attention layers
// with `heads` heads each.
struct FiniteNet {
  NetSpec spec;
  std::vector<int> widths;
  int heads = 1;
  std::vector<ParamBlock> params;

  int depth() const { return static_cast<int>(widths.size()) - 1; }
  int out_dim() const { return widths.back(); }
  std::size_t num_params() const;
  // Index of a block by layer / kind / head, -1 when absent.
  int find(int layer, ParamKind kind, int head = -1, int which = 0) const;
};

FiniteNet init_network(const NetSpec& spec, const std::vector<int>& widths, int heads, std::uint64_t seed);

struct ForwardCache {
  std::vector<Mat> F;  // F[h], h = 1..L (F[0] unused)
  std::vector<Mat> G;  // layer inputs: G[0] = X, G[h] = post-activation of F[h]
  // gat attention layers: per layer, per head
  std::vector<std::vector<Mat>> L, P, V;
};

Mat forward(const FiniteNet& net, const AdjacencyOperator& A, const Mat& X, ForwardCache* cache = nullptr);

// Jacobian of output r w.r.t. block b is s * D_r * H^T (shape of the block).
struct BlockFactor {
  int block = 0;
  double s = 1.0;
  const std::vector<Mat>* D = nullptr;  // one p x n matrix per seeded output
  const Mat* H = nullptr;               // q x n
};

// Reverse pass from a list of output sensitivities (each d_L x n). The callback sees each
// parameter block once.
void backward(const FiniteNet& net, const AdjacencyOperator& A, const ForwardCache& cache,
              const std::vector<Mat>& seeds, const std::function<void(const BlockFactor&)>& on_block);

// Explicit Jacobian blocks, one (n d_L) x |block| matrix per parameter block; rows follow
// vec(F) (index o + j d_L), columns follow column-major vec of the block.
std::vector<Mat> jacobian_blocks(const FiniteNet& net, const AdjacencyOperator& A, const Mat& X);

// Central differences of vec(F) w.r.t. every entry of one block.
Mat finite_difference_block(const FiniteNet& net, const AdjacencyOperator& A, const Mat& X, int block,
                            double step = 1e-5);

constexpr std::size_t kNtkCapacity = 1u << 24;  // max entries of the (n d_L)^2 Gram

// Sum over parameter blocks of J_b J_b^T, (n d_L) x (n d_L). nodes restricts the outputs.
Mat empirical_ntk(const FiniteNet& net, const AdjacencyOperator& A, const Mat& X,
                  const std::vector<int>& nodes = {});

enum class Optimizer { gd, adam };
enum class Loss { mse, cross_entropy };
// sum: 1/2 sum_i ||f_i - y_i||^2 (mse) or summed cross entropy; mean divides by |train|.
enum class Reduction { sum, mean };
Optimizer parse_optimizer(const std::string& s);
Loss parse_loss(const std::string& s);
Reduction parse_reduction(const std::string& s);

struct TrainConfig {
  Optimizer optimizer = Optimizer::gd;
  Loss loss = Loss::mse;
  Reduction reduction = Reduction::sum;
  double lr = 1e-3;
  int epochs = 100;
  int track_ntk_every = 10;
  bool center_output = false;  // train f(theta) - f(theta_0)
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
};

struct TraceRow {
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;  // NaN for regression
  double weight_drift = 0.0;
  double ntk_drift = 0.0;  // NaN on epochs without an NTK evaluation
};

struct TrainingTrace {
  std::vector<TraceRow> rows;
  void write_csv(const std::string& path) const;
};

// Thrown when the loss becomes non-finite; carries the trace up to that epoch.
class DivergedTraining : public DivergedError {
 public:
  DivergedTraining(const std::string& msg, int epoch, TrainingTrace t)
      : DivergedError(msg, epoch), trace(std::move(t)) {}
  TrainingTrace trace;
};

// Targets Y are d_L x n; train lists the nodes entering the loss.
double loss_value(const Mat& F, const Mat& Y, const std::vector<int>& train, Loss loss,
                  Reduction red = Reduction::sum);
Mat loss_gradient(const Mat& F, const Mat& Y, const std::vector<int>& train, Loss loss,
                  Reduction red = Reduction::sum);

TrainingTrace train(FiniteNet& net, const AdjacencyOperator& A, const Mat& X, const Mat& Y,
                    const std::vector<int>& train_nodes, const TrainConfig& cfg,
                    const std::vector<int>& labels = {});

// Convenience overload over a dataset bundle (one-hot targets for classification).
TrainingTrace train(FiniteNet& net, const NodeDataset& data, const SplitMask& mask, AdjMode mode,
                    const TrainConfig& cfg);

struct KernelNetworkReport {
  Mat network;  // test predictions of the trained (centered) network, d_L x |test|
  Mat kernel;   // closed-form NTK regression at lambda -> 0
  double max_deviation = 0.0;
  double final_loss = 0.0;
};

// Trains a wide network with GD on mse (centered output) and compares its test predictions
// with NTK kernel regression.
KernelNetworkReport kernel_vs_network_prediction(const NetSpec& spec, const std::vector<int>& widths,
                                                 const AdjacencyOperator& A, const Mat& X, const Mat& Y,
                                                 const std::vector<int>& train_nodes,
                                                 const std::vector<int>& test_nodes, double lr, int epochs,
                                                 std::uint64_t seed, int heads = 1);

// Closed-form NTK matching a finite architecture (depth = widths.size() - 1).
Mat closed_form_ntk(const NetSpec& spec, int depth, const AdjacencyOperator& A, const Mat& X);
Mat closed_form_gp(const NetSpec& spec, int depth, const AdjacencyOperator& A, const Mat& X);

}  // namespace gnk
