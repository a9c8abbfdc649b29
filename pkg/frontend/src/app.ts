/** Browser bootstrap: mounts the controller onto #app with event delegation. */

import { ApiClient } from "./api.js";
import { AppController } from "./controller.js";
import { render } from "./render.js";

export function mount(root: HTMLElement, controller: AppController): void {
  const draw = () => {
    root.innerHTML = render(controller.state, controller.api);
  };
  controller.subscribe(draw);

  root.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const input = root.querySelector<HTMLInputElement>("#instruction");
    if (target.id === "generate") {
      void controller.submitInstruction(input?.value ?? "", "generate");
    } else if (target.id === "edit") {
      void controller.submitInstruction(input?.value ?? "", "edit");
    } else if (target.id === "copy-code") {
      const code = root.querySelector("#recovered-code")?.textContent ?? "";
      void navigator.clipboard?.writeText(code);
    } else {
      const card = target.closest<HTMLElement>(".version-card");
      if (card?.dataset.version !== undefined) {
        controller.viewVersion(Number(card.dataset.version));
      }
    }
  });

  root.addEventListener("change", (event) => {
    const target = event.target as HTMLInputElement;
    if (target.id === "upload" && target.files && target.files.length > 0) {
      void controller.uploadDiagram(target.files[0]);
    }
  });

  draw();
}

export async function start(): Promise<AppController> {
  const controller = new AppController(new ApiClient(""));
  const root = document.getElementById("app");
  if (root === null) throw new Error("missing #app element");
  mount(root, controller);
  await controller.openSession();
  return controller;
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void start();
}
