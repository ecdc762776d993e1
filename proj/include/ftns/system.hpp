#pragma once

#include "ftns/tensor.hpp"

#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace ftns {

// A named slice of a block: reductions merge several original fields into one block.
struct FieldInfo {
  std::string name;
  int block = 0;
  int offset = 0;  // component offset inside the block
  int size = 0;
};

struct FTNSSystem {
  int N = 1;
  int D = 3;
  std::vector<int> dims;
  std::string label;
  std::map<std::pair<int, int>, MultiIndexTensor> A;
  std::map<std::tuple<int, int, int>, MultiIndexTensor> B;
  std::vector<FieldInfo> fields;

  static FTNSSystem zero(int N, int D, std::vector<int> dims, std::string label = "");

  static int A_rank(int mu, int nu) { return mu - nu + 1; }
  static int B_rank(int mu, int rho, int nu) { return mu - nu - rho + 1; }

  // Mutable access; inserts a zero tensor of the right shape when absent.
  MultiIndexTensor& A_ref(int mu, int nu);
  MultiIndexTensor& B_ref(int mu, int rho, int nu);
  const MultiIndexTensor* A_find(int mu, int nu) const;
  const MultiIndexTensor* B_find(int mu, int rho, int nu) const;

  int total_dim() const;
  int block_offset(int mu) const;
  std::vector<FieldInfo> field_list() const;

  FTNSSystem scaled_principal(double factor) const;
};

struct Violation {
  std::string where;  // "A[mu][nu]" or "B[mu][rho][nu]" or "dims"
  std::string message;
};

std::vector<Violation> validate(const FTNSSystem& sys);
void require_valid(const FTNSSystem& sys);

// State basis: block mu carries u_I = d^{N-mu-1} v^mu, I running over tuples of
// length N-mu-1 (canonical sorted tuples when compressed, all D^L tuples when full).
class StateBasis {
 public:
  StateBasis(int N, int D, std::vector<int> dims, bool compressed);

  int N() const { return N_; }
  int D() const { return D_; }
  bool compressed() const { return compressed_; }
  int size() const { return size_; }
  int blocks() const { return static_cast<int>(dims_.size()); }
  int dim(int mu) const { return dims_[mu]; }
  int tuple_length(int mu) const { return N_ - mu - 1; }
  const std::vector<Index>& tuples(int mu) const { return tuples_[mu]; }
  int block_offset(int mu) const { return offset_[mu]; }
  int block_size(int mu) const { return static_cast<int>(tuples_[mu].size()) * dims_[mu]; }
  int index(int mu, long tuple_pos, int a) const;
  // Position of the tuple (any order accepted for compressed bases).
  long tuple_position(int mu, const Index& idx) const;

  // Multiplicity of each basis element (1 for the full basis).
  RVec multiplicities() const;
  // R(s): maps field amplitudes (sum of n_mu) to states u_I = s_I v.
  Mat direction_lift(const RVec& s) const;
  int field_total() const;

 private:
  int N_, D_;
  bool compressed_;
  std::vector<int> dims_;
  std::vector<std::vector<Index>> tuples_;
  std::vector<int> offset_;
  int size_ = 0;
};

StateBasis compressed_basis(const FTNSSystem& sys);
StateBasis full_basis(const FTNSSystem& sys);

// Full-to-compressed bookkeeping: E maps compressed states to full symmetric states.
Mat embedding_matrix(const StateBasis& full, const StateBasis& comp);

struct PrincipalObjects {
  StateBasis basis;
  std::vector<Mat> Ap;  // compressed action, one matrix per direction index p

  Mat action(const RVec& s) const;  // sum_p s_p Ap[p]
  Mat SN(const RVec& s) const { return basis.direction_lift(s); }
  // Principal symbol through the S^N contraction.
  Mat symbol(const RVec& s) const;
};

// Full-index principal matrix, symmetric in its row and column tuples.
std::vector<Mat> principal_matrix_full(const FTNSSystem& sys);
PrincipalObjects principal_matrix(const FTNSSystem& sys);
Mat principal_symbol(const FTNSSystem& sys, const RVec& s);
// Block-wise direct contraction A^mu_nu(s, ..., s).
Mat principal_symbol_direct(const FTNSSystem& sys, const RVec& s);

}  // namespace ftns
