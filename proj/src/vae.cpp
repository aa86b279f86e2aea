#include "clarity/vae.hpp"

#include "clarity/serialize.hpp"

namespace clarity {

Vae train_vae_f32(const ImageDataset& train, const ImageDataset* test, const VaeTrainConfig& cfg,
                  VaeTrainLog* log) {
    return train_vae<float>(train, test, cfg, log);
}

Vae train_aux_2d_vae(const ImageDataset& train, const ImageDataset* test, VaeTrainConfig cfg,
                     VaeTrainLog* log) {
    cfg.d = 2;
    return train_vae<float>(train, test, cfg, log);
}

void save_vae(const std::string& path, const Vae& vae) {
    Blob blob;
    blob.set("module", "vae");
    blob.set("latent_dim", std::to_string(vae.d));
    blob.set("beta", std::to_string(vae.beta));
    blob.set("channels", std::to_string(vae.arch.c1) + "," + std::to_string(vae.arch.c2) + "," +
                             std::to_string(vae.arch.c3));
    blob.set("input_hw", std::to_string(vae.arch.input_hw));
    blob.set("arch", vae.fingerprint());
    blob.set("trained", vae.trained ? "1" : "0");
    params_to_blob(vae.params, "", blob);
    write_blob(path, blob);
}

Vae load_vae(const std::string& path) {
    Blob blob = read_blob(path);
    if (blob.get("module") != "vae")
        throw std::runtime_error(path + ": not a vae model (module=" + blob.get("module") + ")");
    VaeArch arch;
    const std::string ch = blob.get("channels");
    if (std::sscanf(ch.c_str(), "%d,%d,%d", &arch.c1, &arch.c2, &arch.c3) != 3)
        throw std::runtime_error(path + ": bad channels field '" + ch + "'");
    arch.input_hw = std::stoi(blob.get("input_hw"));
    const int d = std::stoi(blob.get("latent_dim"));
    const double beta = std::stod(blob.get("beta"));
    Vae vae = build_vae<float>(d, beta, 0, arch);
    if (blob.get("arch") != vae.fingerprint())
        throw std::runtime_error(path + ": architecture fingerprint mismatch");
    params_from_blob(blob, "", vae.params);
    vae.trained = blob.get("trained") == "1";
    return vae;
}

}  // namespace clarity
