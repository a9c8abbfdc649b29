import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { AppController } from "../src/controller.js";
import { mount } from "../src/app.js";
import { render } from "../src/render.js";
import {
  EDITED_CODE,
  MockServer,
  ORIGINAL_CODE,
  RECOVERED_CODE,
} from "./mock_server.js";

function makeController(server: MockServer): AppController {
  return new AppController(new ApiClient("", server.fetch), false);
}

describe("generate-then-edit session", () => {
  let server: MockServer;
  let controller: AppController;

  beforeEach(async () => {
    server = new MockServer();
    controller = makeController(server);
    await controller.openSession();
  });

  it("produces two version cards with exactly two workflow API calls", async () => {
    await controller.submitInstruction("A to B flowchart", "generate");
    await controller.submitInstruction("make the edge dashed", "edit");
    expect(server.workflowCalls()).toEqual([
      { method: "POST", path: "/v1/sessions/s1/generate" },
      { method: "POST", path: "/v1/sessions/s1/edit" },
    ]);
    const html = render(controller.state, controller.api);
    expect(html.match(/class="version-card/g)).toHaveLength(2);
    expect(controller.state.view?.cards.map((c) => c.index)).toEqual([1, 2]);
    expect(controller.state.view?.activeIndex).toBe(1); // newest focused
  });

  it("diff pane highlights the dashed-edge change against the parent", async () => {
    await controller.submitInstruction("A to B flowchart", "generate");
    await controller.submitInstruction("make the edge dashed", "edit");
    const html = render(controller.state, controller.api);
    expect(html).toContain('<pre class="diff" data-parent="1">');
    expect(html).toContain(
      '<span class="diff-added">  a -&gt; b [style=dashed];</span>',
    );
    expect(html).toContain('<span class="diff-removed">  a -&gt; b;</span>');
  });

  it("version 1 has no diff pane", async () => {
    await controller.submitInstruction("A to B flowchart", "generate");
    const html = render(controller.state, controller.api);
    expect(html).not.toContain('class="diff"');
  });

  it("cards carry badge, round count, and verify verdict", async () => {
    await controller.submitInstruction("A to B flowchart", "generate");
    const html = render(controller.state, controller.api);
    expect(html).toContain('<span class="badge ok">compiled</span>');
    expect(html).toContain('<span class="rounds">rounds: 1</span>');
    expect(html).toContain('<span class="verdict">complete</span>');
  });

  it("state fidelity: refetching reproduces the displayed history", async () => {
    await controller.submitInstruction("A to B flowchart", "generate");
    await controller.submitInstruction("make the edge dashed", "edit");
    const displayed = controller.state.view;
    const other = makeController(server);
    await other.openSession("s1");
    expect(other.state.view?.cards).toEqual(displayed?.cards);
  });
});

describe("validation and errors", () => {
  it("edit with an empty session never issues a request", async () => {
    const server = new MockServer();
    const controller = makeController(server);
    await controller.openSession();
    await controller.submitInstruction("dash it", "edit");
    expect(server.workflowCalls()).toEqual([]);
    expect(controller.state.banner?.code).toBe("no_original");
  });

  it("empty instruction is rejected client-side", async () => {
    const server = new MockServer();
    const controller = makeController(server);
    await controller.openSession();
    await controller.submitInstruction("   ", "generate");
    expect(server.workflowCalls()).toEqual([]);
    expect(controller.state.banner?.code).toBe("empty_input");
  });

  it("server 409 shows a banner and preserves the input text", async () => {
    const server = new MockServer();
    const controller = makeController(server);
    await controller.openSession();
    server.busy = true;
    await controller.submitInstruction("A to B", "generate");
    expect(controller.state.banner?.code).toBe("busy");
    expect(controller.state.pendingInput).toBe("A to B");
    const html = render(controller.state, controller.api);
    expect(html).toContain('data-code="busy"');
    expect(html).toContain('value="A to B"');
  });

  it("network failure surfaces a retry banner", async () => {
    const controller = new AppController(
      new ApiClient("", async () => {
        throw new TypeError("fetch failed");
      }),
      false,
    );
    controller.state = {
      ...controller.state,
      view: { sessionId: "s1", status: "idle", cards: [], activeIndex: -1 },
    };
    await controller.submitInstruction("A to B", "generate");
    expect(controller.state.banner?.code).toBe("network_error");
    expect(controller.state.banner?.message).toContain("retry");
  });
});

describe("upload panel", () => {
  it("fixture PNG fills the code panel", async () => {
    const server = new MockServer();
    const controller = makeController(server);
    await controller.openSession();
    const file = new File([new Uint8Array([137, 80])], "g.png", {
      type: "image/png",
    });
    await controller.uploadDiagram(file);
    expect(server.workflowCalls()).toEqual([
      { method: "POST", path: "/v1/sessions/s1/code" },
    ]);
    expect(controller.state.codePanel?.source).toBe(RECOVERED_CODE);
    const html = render(controller.state, controller.api);
    expect(html).toContain('id="recovered-code"');
    expect(html).toContain("label=&quot;input&quot;");
    expect(html).toContain('id="copy-code"');
  });

  it("gif uploads are rejected client-side", async () => {
    const server = new MockServer();
    const controller = makeController(server);
    await controller.openSession();
    await controller.uploadDiagram(new File([""], "anim.gif"));
    expect(server.workflowCalls()).toEqual([]);
    expect(controller.state.banner?.code).toBe("unsupported_file");
  });
});

describe("DOM mount", () => {
  it("clicking Generate then Edit drives the full loop", async () => {
    const server = new MockServer();
    const controller = makeController(server);
    const root = document.createElement("div");
    document.body.appendChild(root);
    mount(root, controller);
    await controller.openSession();

    const input = root.querySelector<HTMLInputElement>("#instruction")!;
    input.value = "A to B flowchart";
    root.querySelector<HTMLButtonElement>("#generate")!.click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(root.querySelectorAll(".version-card")).toHaveLength(1);
    expect(
      root.querySelector<HTMLButtonElement>("#edit")!.hasAttribute("disabled"),
    ).toBe(false);

    root.querySelector<HTMLInputElement>("#instruction")!.value =
      "make the edge dashed";
    root.querySelector<HTMLButtonElement>("#edit")!.click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(root.querySelectorAll(".version-card")).toHaveLength(2);
    expect(root.querySelector(".diff")?.textContent).toContain("style=dashed");
    expect(server.workflowCalls()).toHaveLength(2);
    document.body.removeChild(root);
  });

  it("edit button is disabled while the session is empty", async () => {
    const server = new MockServer();
    const controller = makeController(server);
    const root = document.createElement("div");
    mount(root, controller);
    await controller.openSession();
    expect(
      root.querySelector<HTMLButtonElement>("#edit")!.hasAttribute("disabled"),
    ).toBe(true);
  });

  it("clicking a card focuses it in the detail pane", async () => {
    const server = new MockServer();
    const controller = makeController(server);
    const root = document.createElement("div");
    mount(root, controller);
    await controller.openSession();
    await controller.submitInstruction("A to B flowchart", "generate");
    await controller.submitInstruction("make the edge dashed", "edit");
    root
      .querySelector<HTMLElement>('.version-card[data-version="0"]')!
      .click();
    expect(controller.state.view?.activeIndex).toBe(0);
    expect(root.querySelector(".detail .code")?.textContent).toBe(
      ORIGINAL_CODE,
    );
    expect(root.querySelector(".detail .code")?.textContent).not.toBe(
      EDITED_CODE,
    );
  });
});
