import { ApiClient } from "./api.js";
import { EditorStore } from "./store.js";
import { EditorView } from "./render.js";

const params = new URLSearchParams(window.location.search);
const serviceUrl = params.get("service") ?? "http://127.0.0.1:8077";

async function boot(): Promise<void> {
  const api = new ApiClient(serviceUrl);
  const store = new EditorStore(api);
  const mount = document.getElementById("editor");
  if (!mount) throw new Error("missing #editor mount point");
  new EditorView(store, mount);

  window.addEventListener("online", () => void store.flushOfflineQueue());

  const picker = document.getElementById("utterance-picker");
  const utterances = await api.utterances();
  if (picker instanceof HTMLSelectElement) {
    for (const utt of utterances) {
      const option = document.createElement("option");
      option.value = utt.id;
      option.textContent = `${utt.id} [${utt.emotion}] ${utt.text}`;
      picker.append(option);
    }
    picker.addEventListener("change", () => void store.open(picker.value));
  }
  const first = utterances[0];
  if (first) await store.open(first.id);
}

void boot().catch((error) => {
  const mount = document.getElementById("editor");
  if (mount) mount.textContent = `failed to reach service: ${error}`;
});
