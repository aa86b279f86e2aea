#include "clarity/classifiers.hpp"

#include "clarity/serialize.hpp"

namespace clarity {

LatentSet encode_dataset(Vae& vae, const ImageDataset& ds, int batch) {
    const int n = ds.size();
    LatentSet out;
    out.mu = Tensor({n, vae.d});
    out.labels = ds.labels;
    for (int start = 0; start < n; start += batch) {
        const int b = std::min(batch, n - start);
        std::vector<int> idx(static_cast<std::size_t>(b));
        for (int i = 0; i < b; ++i) idx[static_cast<std::size_t>(i)] = start + i;
        EncodedBatch eb = encode_batch(vae, gather_images(ds.images, idx));
        std::copy(eb.mu.data.begin(), eb.mu.data.end(),
                  out.mu.data.begin() + static_cast<std::size_t>(start) * vae.d);
    }
    return out;
}

namespace {

void put_classifier_header(Blob& blob, const Classifier& clf) {
    blob.set("space", space_name(clf.space));
    blob.set("arch", clf.fingerprint());
    if (clf.space == Space::kImage) {
        blob.set("channels", std::to_string(clf.arch.c1) + "," + std::to_string(clf.arch.c2) + "," +
                                 std::to_string(clf.arch.c3));
        blob.set("input_hw", std::to_string(clf.arch.input_hw));
    } else {
        blob.set("latent_dim", std::to_string(clf.d));
    }
    blob.set("trained", clf.trained ? "1" : "0");
}

Classifier rebuild_classifier(const Blob& blob, const std::string& path) {
    const Space space = space_from(blob.get("space"));
    Classifier clf;
    if (space == Space::kImage) {
        VaeArch arch;
        const std::string ch = blob.get("channels");
        if (std::sscanf(ch.c_str(), "%d,%d,%d", &arch.c1, &arch.c2, &arch.c3) != 3)
            throw std::runtime_error(path + ": bad channels field '" + ch + "'");
        arch.input_hw = std::stoi(blob.get("input_hw"));
        clf = build_image_classifier<float>(0, arch);
    } else {
        clf = build_latent_classifier<float>(std::stoi(blob.get("latent_dim")), 0);
    }
    if (blob.get("arch") != clf.fingerprint())
        throw std::runtime_error(path + ": architecture fingerprint mismatch");
    clf.trained = blob.get("trained") == "1";
    return clf;
}

}  // namespace

void save_classifier(const std::string& path, const Classifier& clf) {
    Blob blob;
    blob.set("module", "classifier");
    put_classifier_header(blob, clf);
    params_to_blob(clf.params, "", blob);
    write_blob(path, blob);
}

Classifier load_classifier(const std::string& path) {
    Blob blob = read_blob(path);
    if (blob.get("module") != "classifier")
        throw std::runtime_error(path + ": not a classifier model (module=" + blob.get("module") + ")");
    Classifier clf = rebuild_classifier(blob, path);
    params_from_blob(blob, "", clf.params);
    return clf;
}

void save_ensemble(const std::string& path, const Ensemble& ens) {
    if (ens.members.empty()) throw std::runtime_error("save: empty ensemble");
    Blob blob;
    blob.set("module", "ensemble");
    blob.set("members", std::to_string(ens.size()));
    put_classifier_header(blob, ens.members[0]);
    if (!ens.eps_latent.empty()) {
        Tensor eps({static_cast<int>(ens.eps_latent.size())});
        eps.data = ens.eps_latent;
        blob.add_tensor("eps_latent", std::move(eps));
    }
    for (int m = 0; m < ens.size(); ++m)
        params_to_blob(ens.members[static_cast<std::size_t>(m)].params, "m" + std::to_string(m) + ".",
                       blob);
    write_blob(path, blob);
}

Ensemble load_ensemble(const std::string& path) {
    Blob blob = read_blob(path);
    if (blob.get("module") != "ensemble")
        throw std::runtime_error(path + ": not an ensemble model (module=" + blob.get("module") + ")");
    const int M = std::stoi(blob.get("members"));
    if (M < 1) throw std::runtime_error(path + ": member count " + std::to_string(M));
    Ensemble ens;
    ens.space = space_from(blob.get("space"));
    for (int m = 0; m < M; ++m) {
        Classifier clf = rebuild_classifier(blob, path);
        params_from_blob(blob, "m" + std::to_string(m) + ".", clf.params);
        ens.members.push_back(std::move(clf));
    }
    for (const auto& [name, t] : blob.tensors)
        if (name == "eps_latent") ens.eps_latent = t.data;
    return ens;
}

}  // namespace clarity
