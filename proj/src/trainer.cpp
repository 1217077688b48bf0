#include "gooddrag/trainer.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gooddrag/blobworld.hpp"
#include "gooddrag/diffusion.hpp"

namespace gooddrag {

void TrainConfig::validate() const {
    if (steps < 0) throw std::invalid_argument("TrainConfig: steps must be non-negative");
    if (batch < 1) throw std::invalid_argument("TrainConfig: batch must be at least 1");
    if (!(learning_rate > 0.0))
        throw std::invalid_argument("TrainConfig: learning_rate must be positive");
    if (canvas < 8) throw std::invalid_argument("TrainConfig: canvas too small");
}

TrainResult train_denoiser(const TrainConfig& cfg, const ScheduleSpec& sched_spec) {
    cfg.validate();
    NoiseSchedule sched = sched_spec.build();
    ConvDenoiser net = ConvDenoiser::random_init(sched, Rng::derive(cfg.seed, "init"));
    Rng data_rng(Rng::derive(cfg.seed, "data"));

    TrainResult result;
    result.losses.reserve(cfg.steps);

    ConvParams grads = net.params();
    for (int step = 0; step < cfg.steps; ++step) {
        grads.zero();
        double loss = 0.0;
        double scale = 1.0 / cfg.batch;
        for (int b = 0; b < cfg.batch; ++b) {
            BlobScene scene = random_scene(data_rng, cfg.canvas, cfg.canvas);
            Latent z0 = render_scene(scene);
            int t = data_rng.uniform_int(1, sched.t_max());
            Tensor eps = data_rng.normal_tensor(1, cfg.canvas, cfg.canvas);
            Latent zt = forward_noise(z0, t, eps, sched);
            loss += scale * net.accumulate_loss_grad(zt.data, t, eps, grads, scale);
        }
        if (!std::isfinite(loss))
            throw TrainingDiverged("training loss became non-finite at step " +
                                   std::to_string(step + 1));
        net.params().axpy(-cfg.learning_rate, grads);
        result.losses.push_back(loss);
    }

    Checkpoint& ck = result.checkpoint;
    ck.params = net.params();
    ck.canvas = cfg.canvas;
    ck.t_max = sched_spec.t_max;
    ck.beta_min = sched_spec.beta_min;
    ck.beta_max = sched_spec.beta_max;
    ck.train = {{"steps", cfg.steps},
                {"batch", cfg.batch},
                {"learning_rate", cfg.learning_rate},
                {"seed", cfg.seed}};
    return result;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& losses) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "step,loss\n";
    out.precision(17);
    for (size_t i = 0; i < losses.size(); ++i) out << (i + 1) << "," << losses[i] << "\n";
}

std::vector<double> read_loss_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "step,loss")
        throw std::runtime_error("loss csv: unexpected header in " + path.string());
    std::vector<double> losses;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("loss csv: malformed row: " + line);
        losses.push_back(std::stod(line.substr(comma + 1)));
    }
    return losses;
}

}  // namespace gooddrag
