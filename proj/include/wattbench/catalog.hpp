#pragma once

// Reference hardware and model metadata for the evaluated fleet. Used to
// resolve bare names in configs and flattened CSV ingests. Architectural
// counts (hidden size, layers, heads) are not part of this table; supply
// them through a full model entry when they are needed.

#include <optional>
#include <string_view>
#include <vector>

#include "wattbench/types.hpp"

namespace wattbench::catalog {

inline const std::vector<GpuSpec>& gpus() {
  using P = GpuProfile;
  static const std::vector<GpuSpec> k = {
      {"Tesla V100 SXM2", "Volta", P::enterprise, 32, 250, 125, 898, 6, std::nullopt, 2018},
      {"Tesla T4", "Turing", P::enterprise, 16, 70, 65, 320, 4, 12.0, 2018},
      {"A100 SXM4", "Ampere", P::enterprise, 40, 400, 312, 1555, 40, std::nullopt, 2020},
      {"GeForce RTX 3090", "Ampere", P::consumer, 24, 350, 71, 936, 6, std::nullopt, 2020},
      {"A30 PCIe", "Ampere", P::enterprise, 24, 165, 165, 933, 24, 27.0, 2021},
      {"GeForce RTX 4090", "Ada Lovelace", P::consumer, 24, 450, 165, 1010, 72, std::nullopt, 2022},
      {"L40S", "Ada Lovelace", P::enterprise, 48, 300, 362, 864, 48, std::nullopt, 2022},
      {"L4", "Ada Lovelace", P::enterprise, 24, 72, 121, 300, 48, 17.0, 2023},
      {"H100 NVL", "Hopper", P::enterprise, 94, 400, 835, 3940, 50, 59.0, 2023},
      {"H200 NVL", "Hopper", P::enterprise, 141, 700, 835, 4800, 50, std::nullopt, 2024},
  };
  return k;
}

inline const std::vector<ModelSpec>& models() {
  auto d = [](const char* h, const char* f, double p) {
    return ModelSpec{h, f, ArchKind::dense, p, p, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
  };
  auto moe = [](const char* h, const char* f, double total, double active) {
    return ModelSpec{h, f, ArchKind::moe, total, active, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
  };
  static const std::vector<ModelSpec> k = {
      d("openai-community/gpt2", "gpt2", 0.124),
      d("Qwen/Qwen2.5-0.5B-Instruct", "qwen2", 0.490),
      d("nvidia/AceMath-1.5B-Instruct", "qwen2", 1.500),
      d("Qwen/Qwen2.5-1.5B-Instruct", "qwen2", 1.540),
      d("HuggingFaceTB/SmolLM2-1.7B-Instruct", "llama", 1.700),
      d("ibm-granite/granite-3.0-2b-instruct", "granite", 2.000),
      d("google/gemma-2-2b-it", "gemma2", 2.610),
      d("microsoft/phi-2", "phi", 2.700),
      d("ibm-granite/granite-3.1-3b-a800m-instruct", "granitemoe", 3.000),
      d("tiiuae/Falcon3-3B-Instruct", "llama", 3.000),
      d("Qwen/Qwen2.5-3B-Instruct", "qwen2", 3.090),
      d("meta-llama/Llama-3.2-3B-Instruct", "llama", 3.210),
      d("microsoft/Phi-3-mini-4k-instruct", "phi3", 3.800),
      d("nvidia/Nemotron-Mini-4B-Instruct", "nemotron", 4.000),
      d("nvidia/Llama-3.1-Minitron-4B-Width-Base", "llama", 5.000),
      d("EleutherAI/gpt-j-6b", "gptj", 6.050),
      d("01-ai/Yi-1.5-6B-Chat", "llama", 6.000),
      d("mlabonne/NeuralBeagle14-7B", "mistral", 7.000),
      d("berkeley-nest/Starling-LM-7B-alpha", "mistral", 7.000),
      d("mlabonne/AlphaMonarch-7B", "mistral", 7.000),
      d("nvidia/AceMath-7B-Instruct", "qwen2", 7.000),
      d("allenai/OLMo-2-1124-7B-Instruct", "olmo2", 7.000),
      d("deepseek-ai/deepseek-llm-7b-chat", "llama", 7.000),
      d("internlm/internlm2-7b", "internlm2", 7.000),
      d("tiiuae/Falcon3-Mamba-7B-Instruct", "falcon_mamba", 7.000),
      d("mistralai/Mistral-7B-Instruct-v0.3", "mistral", 7.250),
      d("Qwen/Qwen2.5-7B-Instruct", "qwen2", 7.620),
      d("ibm-granite/granite-3.0-8b-instruct", "granite", 8.000),
      d("nvidia/Mistral-NeMo-Minitron-8B-Instruct", "mistral", 8.000),
      d("meta-llama/Llama-3.1-8B-Instruct", "llama", 8.030),
      d("01-ai/Yi-1.5-9B-Chat", "llama", 9.000),
      d("upstage/SOLAR-10.7B-Instruct-v1.0", "llama", 10.700),
      d("google/gemma-3-12b-it", "gemma3", 12.000),
      d("meta-llama/Llama-2-13b-chat-hf", "llama", 13.000),
      d("allenai/OLMo-2-1124-13B-Instruct", "olmo2", 14.000),
      d("Qwen/Qwen3-14B", "qwen3", 14.000),
      d("microsoft/Phi-3-medium-4k-instruct", "phi3", 14.000),
      d("Qwen/Qwen1.5-MoE-A2.7B-Chat", "qwen2_moe", 14.300),
      d("microsoft/phi-4", "phi3", 14.700),
      d("internlm/internlm2_5-20b-chat", "internlm2", 20.000),
      d("EleutherAI/gpt-neox-20b", "gpt_neox", 20.000),
      d("upstage/solar-pro-preview-instruct", "solar", 22.100),
      d("mistralai/Mistral-Small-24B-Instruct-2501", "mistral", 24.000),
      d("mistralai/Mistral-Small-Instruct-2409", "mistral", 24.000),
      d("google/gemma-3-27b-it", "gemma3", 27.000),
      moe("microsoft/Phi-tiny-MoE-instruct", "phimoe", 3.800, 1.100),
      moe("allenai/OLMoE-1B-7B-0924", "olmoe", 7.000, 1.000),
      moe("deepseek-ai/deepseek-moe-16b-base", "deepseek", 16.000, 2.800),
      moe("unsloth/gpt-oss-20b-BF16", "gpt_oss", 21.000, 3.600),
      moe("nvidia/NVIDIA-Nemotron-3-Nano-30B-A3B-BF16", "nemotron_h", 30.000, 3.500),
  };
  return k;
}

/// Looks up a GPU by exact name, then by name prefix ("H100 NVL 94 GB" ->
/// "H100 NVL", "Tesla V100" -> "Tesla V100 SXM2").
inline std::optional<GpuSpec> find_gpu(std::string_view name) {
  for (const auto& g : gpus())
    if (g.name == name) return g;
  for (const auto& g : gpus()) {
    const std::string_view n = g.name;
    if (name.starts_with(n) || n.starts_with(name)) return g;
  }
  return std::nullopt;
}

inline std::optional<ModelSpec> find_model(std::string_view hub_handle) {
  for (const auto& m : models())
    if (m.hub_handle == hub_handle) return m;
  return std::nullopt;
}

}  // namespace wattbench::catalog
