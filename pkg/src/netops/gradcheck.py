"""
Central finite-difference checks of autograd gradients.
"""

from typing import Callable, Optional, Sequence

import torch

from core.exceptions import InvalidParameterError


def relative_error(analytic: torch.Tensor, numeric: torch.Tensor) -> float:
    """Norm-relative discrepancy ||a - n|| / max(||a|| + ||n||, tiny)."""
    diff = torch.linalg.vector_norm(analytic - numeric).item()
    scale = torch.linalg.vector_norm(analytic).item() + torch.linalg.vector_norm(numeric).item()
    return diff / max(scale, 1e-300)


def max_relative_error(objective: Callable[[], torch.Tensor],
                       tensors: Sequence[torch.Tensor],
                       step: float = 1e-4,
                       max_entries: Optional[int] = None,
                       seed: int = 0) -> float:
    """
    Compare autograd gradients of a scalar objective with central differences.

    The objective is re-evaluated with each checked entry nudged by +/- step
    in place, so it must read the tensors rather than copies of them.

    Args:
        objective: Zero-argument callable returning a scalar tensor
        tensors: Leaf tensors (requires_grad=True), ideally float64
        step: Finite-difference step
        max_entries: Check at most this many randomly chosen entries per tensor
        seed: Selects the entries when max_entries is set

    Returns:
        Largest per-tensor relative error
    """
    tensors = list(tensors)
    if not tensors:
        raise InvalidParameterError("No tensors to check")
    for t in tensors:
        if not t.requires_grad:
            raise InvalidParameterError(
                "Gradient check needs tensors with requires_grad=True",
                context={'shape': tuple(t.shape)}
            )

    value = objective()
    if value.numel() != 1:
        raise InvalidParameterError(
            f"Objective must be scalar, got shape {tuple(value.shape)}",
            context={'shape': tuple(value.shape)}
        )
    analytic = torch.autograd.grad(value, tensors, allow_unused=True)

    generator = torch.Generator().manual_seed(seed)
    worst = 0.0
    with torch.no_grad():
        for tensor, grad in zip(tensors, analytic):
            grad = torch.zeros_like(tensor) if grad is None else grad
            flat = tensor.view(-1)
            if max_entries is not None and flat.numel() > max_entries:
                indices = torch.randperm(flat.numel(), generator=generator)[:max_entries]
            else:
                indices = torch.arange(flat.numel())
            numeric = torch.empty(len(indices), dtype=tensor.dtype)
            for k, index in enumerate(indices.tolist()):
                original = flat[index].item()
                flat[index] = original + step
                plus = objective().item()
                flat[index] = original - step
                minus = objective().item()
                flat[index] = original
                numeric[k] = (plus - minus) / (2.0 * step)
            worst = max(worst, relative_error(grad.reshape(-1)[indices], numeric))
    return worst


def op_relative_error(op: Callable[..., torch.Tensor], inputs: Sequence[torch.Tensor],
                      step: float = 1e-4, seed: int = 0) -> float:
    """
    Gradient check of an op against a fixed random projection of its output.

    Args:
        op: Callable mapping the inputs to a tensor
        inputs: Float64 leaf tensors with requires_grad=True
        step: Finite-difference step
        seed: Seeds the projection

    Returns:
        Largest per-input relative error
    """
    with torch.no_grad():
        reference = op(*inputs)
    generator = torch.Generator().manual_seed(seed)
    weights = torch.randn(reference.shape, generator=generator, dtype=reference.dtype)
    return max_relative_error(lambda: (op(*inputs) * weights).sum(), inputs, step=step)
