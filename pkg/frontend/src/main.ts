import { ApiClient } from "./api.js";
import { HtmlAudioPreview } from "./audio.js";
import { SceneCanvas } from "./canvas.js";
import { PanelStore } from "./store.js";
import { EventStreamClient } from "./stream.js";
import { PanelView } from "./view.js";

export async function bootstrap(root: HTMLElement): Promise<void> {
  root.innerHTML =
    '<div id="canvas" class="canvas"></div><div id="panel" class="panel"></div>';
  const api = new ApiClient();
  const store = new PanelStore();
  const view = new PanelView(root.querySelector("#panel") as HTMLElement, store, api, new HtmlAudioPreview());
  view.render();

  // Panel state is a pure projection of the stream: the full backlog replays
  // on connect, so there is no separate initial fetch to race against.
  const stream = new EventStreamClient((type, data) => {
    if (store.apply(type, data)) view.render();
  });
  stream.connect();

  const session = await api.session();
  new SceneCanvas(root.querySelector("#canvas") as HTMLElement, session.scene, api);
}

const appRoot = typeof document !== "undefined" ? document.getElementById("app") : null;
if (appRoot) {
  void bootstrap(appRoot);
}
