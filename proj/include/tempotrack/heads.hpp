#pragma once

#include "tempotrack/attrans.hpp"
#include "tempotrack/ops.hpp"

namespace tempotrack {

// Anchor-free prediction heads: two same-padding 3x3 conv stacks over the
// refined map, one for the background/foreground pair, one for the four
// box offsets (left, top, right, bottom) in feature-cell units.
struct HeadParams {
    ConvParams cls1, cls2;  // C_i -> C_i -> 2
    ConvParams reg1, reg2;  // C_i -> C_i -> 4
};

struct HeadOutput {
    Tensor cls;  // 2 x H x W
    Tensor reg;  // 4 x H x W
};

inline HeadOutput head_forward(const Tensor& refined_map, const HeadParams& p) {
    Tensor c = relu(conv2d(refined_map, p.cls1.weights, p.cls1.bias, 1, p.cls1.padding));
    c = conv2d(c, p.cls2.weights, p.cls2.bias, 1, p.cls2.padding);
    Tensor r = relu(conv2d(refined_map, p.reg1.weights, p.reg1.bias, 1, p.reg1.padding));
    r = conv2d(r, p.reg2.weights, p.reg2.bias, 1, p.reg2.padding);
    return {std::move(c), std::move(r)};
}

}  // namespace tempotrack
