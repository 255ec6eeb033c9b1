#include "tk/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace tk::ag {

namespace {

Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn) {
    auto node = std::make_shared<Node>();
    bool needs_grad = false;
    for (const auto& p : parents) {
        needs_grad = needs_grad || p->requires_grad;
    }
    node->value = std::move(value);
    node->requires_grad = needs_grad;
    if (needs_grad) {
        node->grad = Tensor(node->value.rows(), node->value.cols());
        node->parents = std::move(parents);
        node->backward = std::move(backward_fn);
    }
    return node;
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (!a->value.same_shape(b->value)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a->value.shape_string() +
                                    " vs " + b->value.shape_string());
    }
}

} // namespace

Var constant(Tensor value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->requires_grad = false;
    return node;
}

Var leaf(Tensor value) {
    auto node = std::make_shared<Node>();
    node->grad = Tensor(value.rows(), value.cols());
    node->value = std::move(value);
    node->requires_grad = true;
    return node;
}

Var matmul(const Var& a, const Var& b) {
    const Tensor& av = a->value;
    const Tensor& bv = b->value;
    if (av.cols() != bv.rows()) {
        throw std::invalid_argument("matmul: inner dimensions differ, " + av.shape_string() + " * " +
                                    bv.shape_string());
    }
    const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
    Tensor out(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = av.at(i, p);
            if (aip == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                out.at(i, j) += aip * bv.at(p, j);
            }
        }
    }
    return make_node(std::move(out), {a, b}, [m, k, n](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        if (pa.requires_grad) {
            // da = g * b^T
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    const double g = self.grad.at(i, j);
                    if (g == 0.0) continue;
                    for (std::size_t p = 0; p < k; ++p) {
                        pa.grad.at(i, p) += g * pb.value.at(p, j);
                    }
                }
            }
        }
        if (pb.requires_grad) {
            // db = a^T * g
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    const double av_ip = pa.value.at(i, p);
                    if (av_ip == 0.0) continue;
                    for (std::size_t j = 0; j < n; ++j) {
                        pb.grad.at(p, j) += av_ip * self.grad.at(i, j);
                    }
                }
            }
        }
    });
}

Var transpose(const Var& a) {
    const Tensor& av = a->value;
    Tensor out(av.cols(), av.rows());
    for (std::size_t i = 0; i < av.rows(); ++i) {
        for (std::size_t j = 0; j < av.cols(); ++j) {
            out.at(j, i) = av.at(i, j);
        }
    }
    return make_node(std::move(out), {a}, [](Node& self) {
        Node& pa = *self.parents[0];
        if (!pa.requires_grad) return;
        for (std::size_t i = 0; i < self.grad.rows(); ++i) {
            for (std::size_t j = 0; j < self.grad.cols(); ++j) {
                pa.grad.at(j, i) += self.grad.at(i, j);
            }
        }
    });
}

Var add(const Var& a, const Var& b) {
    require_same_shape(a, b, "add");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b->value[i];
    return make_node(std::move(out), {a, b}, [](Node& self) {
        for (int which = 0; which < 2; ++which) {
            Node& p = *self.parents[which];
            if (!p.requires_grad) continue;
            for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
        }
    });
}

Var sub(const Var& a, const Var& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b->value[i];
    return make_node(std::move(out), {a, b}, [](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            if (pa.requires_grad) pa.grad[i] += self.grad[i];
            if (pb.requires_grad) pb.grad[i] -= self.grad[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    require_same_shape(a, b, "mul");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b->value[i];
    return make_node(std::move(out), {a, b}, [](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double g = self.grad[i];
            if (pa.requires_grad) pa.grad[i] += g * pb.value[i];
            if (pb.requires_grad) pb.grad[i] += g * pa.value[i];
        }
    });
}

Var scale(const Var& a, double c) {
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c;
    return make_node(std::move(out), {a}, [c](Node& self) {
        Node& pa = *self.parents[0];
        if (!pa.requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += c * self.grad[i];
    });
}

Var add_scalar(const Var& a, double c) {
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c;
    return make_node(std::move(out), {a}, [](Node& self) {
        Node& pa = *self.parents[0];
        if (!pa.requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
    });
}

Var add_rowvec(const Var& a, const Var& row) {
    const Tensor& av = a->value;
    const Tensor& rv = row->value;
    if (rv.rows() != 1 || rv.cols() != av.cols()) {
        throw std::invalid_argument("add_rowvec: row must be 1 x " + std::to_string(av.cols()) +
                                    ", got " + rv.shape_string());
    }
    Tensor out = av;
    for (std::size_t i = 0; i < av.rows(); ++i) {
        for (std::size_t j = 0; j < av.cols(); ++j) {
            out.at(i, j) += rv.at(0, j);
        }
    }
    return make_node(std::move(out), {a, row}, [](Node& self) {
        Node& pa = *self.parents[0];
        Node& pr = *self.parents[1];
        for (std::size_t i = 0; i < self.grad.rows(); ++i) {
            for (std::size_t j = 0; j < self.grad.cols(); ++j) {
                const double g = self.grad.at(i, j);
                if (pa.requires_grad) pa.grad.at(i, j) += g;
                if (pr.requires_grad) pr.grad.at(0, j) += g;
            }
        }
    });
}

Var mul_scalar(const Var& a, const Var& s) {
    if (s->value.size() != 1) {
        throw std::invalid_argument("mul_scalar: scalar operand has shape " + s->value.shape_string());
    }
    const double sv = s->value[0];
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= sv;
    return make_node(std::move(out), {a, s}, [](Node& self) {
        Node& pa = *self.parents[0];
        Node& ps = *self.parents[1];
        const double sv = ps.value[0];
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double g = self.grad[i];
            if (pa.requires_grad) pa.grad[i] += g * sv;
            if (ps.requires_grad) ps.grad[0] += g * pa.value[i];
        }
    });
}

Var vexp(const Var& a) {
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(out[i]);
    return make_node(std::move(out), {a}, [](Node& self) {
        Node& pa = *self.parents[0];
        if (!pa.requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * self.value[i];
    });
}

Var vlog(const Var& a) {
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] <= 0.0) {
            throw std::domain_error("vlog: non-positive input " + std::to_string(out[i]));
        }
        out[i] = std::log(out[i]);
    }
    return make_node(std::move(out), {a}, [](Node& self) {
        Node& pa = *self.parents[0];
        if (!pa.requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] / pa.value[i];
    });
}

Var relu(const Var& a) {
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
    return make_node(std::move(out), {a}, [](Node& self) {
        Node& pa = *self.parents[0];
        if (!pa.requires_grad) return;
        // subgradient 0 at the kink
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            if (pa.value[i] > 0.0) pa.grad[i] += self.grad[i];
        }
    });
}

Var sigmoid(const Var& a) {
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = out[i];
        out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    }
    return make_node(std::move(out), {a}, [](Node& self) {
        Node& pa = *self.parents[0];
        if (!pa.requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double s = self.value[i];
            pa.grad[i] += self.grad[i] * s * (1.0 - s);
        }
    });
}

Var clamp_min(const Var& a, double floor) {
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > floor ? out[i] : floor;
    return make_node(std::move(out), {a}, [floor](Node& self) {
        Node& pa = *self.parents[0];
        if (!pa.requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            if (pa.value[i] > floor) pa.grad[i] += self.grad[i];
        }
    });
}

Var sum_all(const Var& a) {
    double total = 0.0;
    for (std::size_t i = 0; i < a->value.size(); ++i) total += a->value[i];
    return make_node(Tensor::scalar(total), {a}, [](Node& self) {
        Node& pa = *self.parents[0];
        if (!pa.requires_grad) return;
        const double g = self.grad[0];
        for (std::size_t i = 0; i < pa.grad.size(); ++i) pa.grad[i] += g;
    });
}

Var sum_axis(const Var& a, int axis) {
    const Tensor& av = a->value;
    if (axis == 0) {
        Tensor out(1, av.cols());
        for (std::size_t i = 0; i < av.rows(); ++i) {
            for (std::size_t j = 0; j < av.cols(); ++j) out.at(0, j) += av.at(i, j);
        }
        return make_node(std::move(out), {a}, [](Node& self) {
            Node& pa = *self.parents[0];
            if (!pa.requires_grad) return;
            for (std::size_t i = 0; i < pa.grad.rows(); ++i) {
                for (std::size_t j = 0; j < pa.grad.cols(); ++j) pa.grad.at(i, j) += self.grad.at(0, j);
            }
        });
    }
    if (axis == 1) {
        Tensor out(av.rows(), 1);
        for (std::size_t i = 0; i < av.rows(); ++i) {
            for (std::size_t j = 0; j < av.cols(); ++j) out.at(i, 0) += av.at(i, j);
        }
        return make_node(std::move(out), {a}, [](Node& self) {
            Node& pa = *self.parents[0];
            if (!pa.requires_grad) return;
            for (std::size_t i = 0; i < pa.grad.rows(); ++i) {
                for (std::size_t j = 0; j < pa.grad.cols(); ++j) pa.grad.at(i, j) += self.grad.at(i, 0);
            }
        });
    }
    throw std::invalid_argument("sum_axis: axis must be 0 or 1");
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: empty input");
    const std::size_t rows = parts.front()->value.rows();
    std::size_t total_cols = 0;
    for (const auto& p : parts) {
        if (p->value.rows() != rows) {
            throw std::invalid_argument("concat_cols: row counts differ");
        }
        total_cols += p->value.cols();
    }
    Tensor out(rows, total_cols);
    std::size_t offset = 0;
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < p->value.cols(); ++j) {
                out.at(i, offset + j) = p->value.at(i, j);
            }
        }
        offset += p->value.cols();
    }
    return make_node(std::move(out), parts, [rows](Node& self) {
        std::size_t offset = 0;
        for (auto& parent : self.parents) {
            const std::size_t w = parent->value.cols();
            if (parent->requires_grad) {
                for (std::size_t i = 0; i < rows; ++i) {
                    for (std::size_t j = 0; j < w; ++j) {
                        parent->grad.at(i, j) += self.grad.at(i, offset + j);
                    }
                }
            }
            offset += w;
        }
    });
}

Var softmax_rows(const Var& a) {
    const Tensor& av = a->value;
    Tensor out(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.rows(); ++i) {
        double row_max = av.at(i, 0);
        for (std::size_t j = 1; j < av.cols(); ++j) row_max = std::max(row_max, av.at(i, j));
        double denom = 0.0;
        for (std::size_t j = 0; j < av.cols(); ++j) {
            const double e = std::exp(av.at(i, j) - row_max);
            out.at(i, j) = e;
            denom += e;
        }
        for (std::size_t j = 0; j < av.cols(); ++j) out.at(i, j) /= denom;
    }
    return make_node(std::move(out), {a}, [](Node& self) {
        Node& pa = *self.parents[0];
        if (!pa.requires_grad) return;
        for (std::size_t i = 0; i < self.value.rows(); ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < self.value.cols(); ++j) {
                dot += self.grad.at(i, j) * self.value.at(i, j);
            }
            for (std::size_t j = 0; j < self.value.cols(); ++j) {
                pa.grad.at(i, j) += self.value.at(i, j) * (self.grad.at(i, j) - dot);
            }
        }
    });
}

Var masked_fill(const Var& a, const Tensor& keep, double fill) {
    const Tensor& av = a->value;
    if (!av.same_shape(keep)) {
        throw std::invalid_argument("masked_fill: mask shape " + keep.shape_string() +
                                    " does not match " + av.shape_string());
    }
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (keep[i] == 0.0) out[i] = fill;
    }
    return make_node(std::move(out), {a}, [keep](Node& self) {
        Node& pa = *self.parents[0];
        if (!pa.requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            if (keep[i] != 0.0) pa.grad[i] += self.grad[i];
        }
    });
}

Var cosine_rows(const Var& a, const Var& b) {
    const Tensor& av = a->value;
    const Tensor& bv = b->value;
    if (av.cols() != bv.cols()) {
        throw std::invalid_argument("cosine_rows: dimensions differ, " + av.shape_string() + " vs " +
                                    bv.shape_string());
    }
    const std::size_t m = av.rows(), n = bv.rows(), d = av.cols();
    std::vector<double> a_norm(m, 0.0), b_norm(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += av.at(i, c) * av.at(i, c);
        a_norm[i] = std::sqrt(s);
    }
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += bv.at(j, c) * bv.at(j, c);
        b_norm[j] = std::sqrt(s);
    }
    Tensor out(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (a_norm[i] == 0.0 || b_norm[j] == 0.0) continue; // zero-norm rows -> 0
            double dot = 0.0;
            for (std::size_t c = 0; c < d; ++c) dot += av.at(i, c) * bv.at(j, c);
            out.at(i, j) = dot / (a_norm[i] * b_norm[j]);
        }
    }
    return make_node(std::move(out), {a, b}, [a_norm, b_norm, m, n, d](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        for (std::size_t i = 0; i < m; ++i) {
            if (a_norm[i] == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (b_norm[j] == 0.0) continue;
                const double g = self.grad.at(i, j);
                if (g == 0.0) continue;
                const double cos_ij = self.value.at(i, j);
                const double inv = 1.0 / (a_norm[i] * b_norm[j]);
                for (std::size_t c = 0; c < d; ++c) {
                    const double ac = pa.value.at(i, c);
                    const double bc = pb.value.at(j, c);
                    if (pa.requires_grad) {
                        pa.grad.at(i, c) += g * (bc * inv - cos_ij * ac / (a_norm[i] * a_norm[i]));
                    }
                    if (pb.requires_grad) {
                        pb.grad.at(j, c) += g * (ac * inv - cos_ij * bc / (b_norm[j] * b_norm[j]));
                    }
                }
            }
        }
    });
}

Var gather_rows(const Var& table, const std::vector<std::uint32_t>& ids) {
    const Tensor& tv = table->value;
    Tensor out(ids.size(), tv.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= tv.rows()) {
            throw std::out_of_range("gather_rows: id " + std::to_string(ids[i]) + " outside table of " +
                                    std::to_string(tv.rows()) + " rows");
        }
        for (std::size_t c = 0; c < tv.cols(); ++c) out.at(i, c) = tv.at(ids[i], c);
    }
    return make_node(std::move(out), {table}, [ids](Node& self) {
        Node& pt = *self.parents[0];
        if (!pt.requires_grad) return;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            for (std::size_t c = 0; c < self.grad.cols(); ++c) {
                pt.grad.at(ids[i], c) += self.grad.at(i, c);
            }
        }
    });
}

Var gather_flat(const Var& a, const std::vector<std::size_t>& idx) {
    const Tensor& av = a->value;
    Tensor out(idx.size(), 1);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= av.size()) {
            throw std::out_of_range("gather_flat: index " + std::to_string(idx[i]) + " outside " +
                                    std::to_string(av.size()) + " elements");
        }
        out.at(i, 0) = av[idx[i]];
    }
    return make_node(std::move(out), {a}, [idx](Node& self) {
        Node& pa = *self.parents[0];
        if (!pa.requires_grad) return;
        for (std::size_t i = 0; i < idx.size(); ++i) pa.grad[idx[i]] += self.grad.at(i, 0);
    });
}

void backward(const Var& root) {
    if (root->value.size() != 1) {
        throw std::logic_error("backward: root must be a scalar, got " + root->value.shape_string());
    }
    if (!root->requires_grad) return;

    // iterative post-order DFS
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    struct Frame {
        Node* node;
        std::size_t next_child;
    };
    std::vector<Frame> stack;
    stack.push_back({root.get(), 0});
    visited.insert(root.get());
    while (!stack.empty()) {
        Frame& frame = stack.back();
        if (frame.next_child < frame.node->parents.size()) {
            Node* child = frame.node->parents[frame.next_child].get();
            ++frame.next_child;
            if (child->requires_grad && visited.insert(child).second) {
                stack.push_back({child, 0});
            }
        } else {
            order.push_back(frame.node);
            stack.pop_back();
        }
    }

    root->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backward) (*it)->backward(**it);
    }
}

} // namespace tk::ag
